#ifndef DEHAZE_RESIZE_H_
#define DEHAZE_RESIZE_H_

#include "dehaze/tensor.h"

namespace dehaze {

// Separable bicubic resampling (Keys kernel, a = -0.5) with pixel-center
// alignment and replicated borders. Weights along each axis sum to one, so
// constant images stay constant. Used for image pyramids and for upsampling
// haze maps, hence the adjoint for backpropagation.
Tensor resize_bicubic(const Tensor& src, int out_h, int out_w);

// Transpose of the linear map resize_bicubic(., out_h, out_w) applied to a
// gradient of the resized tensor; returns a tensor of size in_h x in_w.
Tensor resize_bicubic_adjoint(const Tensor& grad_out, int in_h, int in_w);

}  // namespace dehaze

#endif  // DEHAZE_RESIZE_H_
