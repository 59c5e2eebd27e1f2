#ifndef DEHAZE_GENERATOR_H_
#define DEHAZE_GENERATOR_H_

// UR-Net-K generator: an encoder of K + 1 stride-2 convolutions and a decoder
// made of K U-type residual units, one per encoder level 1..K.
//
// Unit at level i (mate = encoder output e_i, input = decoder feature at
// level i + 1, or e_{K+1} for the innermost unit):
//   up   = lrelu(norm(deconv5x5_s2(input)))   size forced to e_i's (h, w)
//   up   = dropout(up)                        only at the configured sites
//   r    = lrelu(norm(conv3x3_s1([up, e_i]))) channels reduced to e_i's
//   d_i  = e_i - r                            r alone at level 1 when starred
// A final 5x5 stride-2 deconvolution takes d_1 to the input resolution and
// three channels; that map is J^g and the output image is tanh(J^g). I^r is
// a 3x3 convolution of the input image.

#include <cstdint>
#include <vector>

#include "dehaze/layers.h"
#include "dehaze/tensor.h"

namespace dehaze {

struct GeneratorSpec {
  int depth = 7;       // number of UR-Net units K
  bool star = false;   // no subtraction in the last (level 1) unit
  // c_1..c_{K+1}, one width per encoder convolution.
  std::vector<int> encoder_channels{64, 128, 256, 512, 512, 512, 512, 512};
  // Encoder convolution indices (2..K+1) whose mirrored deconvolution is
  // followed by dropout.
  std::vector<int> dropout_sites{6, 7, 8};
  double leak = 0.2;
  double dropout_rate = 0.5;

  // UR-Net-depth(*) with widths 64 * 2^(i-1) capped at 512, divided by
  // `width_divisor` (at least one channel each), dropout on the three
  // innermost deconvolutions.
  static GeneratorSpec canonical(int depth = 7, bool star = false,
                                 int width_divisor = 1);
  void validate() const;
  bool has_dropout(int conv_index) const;
};

struct LayerShape {
  int level = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
};

// h_i = ceil(h / 2^i), w_i = ceil(w / 2^i).
LayerShape layer_size(int input_h, int input_w, int level);

struct NoiseSource {
  std::uint64_t seed = 0;
};

struct GeneratorOutput {
  Tensor dehazed;  // tanh(j_g), in [-1, 1]
  Tensor i_r;
  Tensor j_g;
  Tensor m;        // i_r - j_g
};

class Generator {
 public:
  explicit Generator(GeneratorSpec spec);

  const GeneratorSpec& spec() const { return spec_; }

  // Gaussian kernels (zero mean, `stddev`), unit norm scales, zero shifts.
  void initialize(std::uint64_t seed, double stddev = 0.02);

  GeneratorOutput forward(const Tensor& haze, const NoiseSource& noise);

  // Backpropagates the gradients of a scalar with respect to the outputs of
  // the most recent forward call, accumulating parameter gradients. The
  // gradient of m must be folded into d_i_r / d_j_g by the caller.
  void backward(const Tensor& d_dehazed, const Tensor& d_i_r, const Tensor& d_j_g);

  ParameterList parameters();

  // Shapes of levels 0..K+1 for an input of h x w (level 0 is the image).
  std::vector<LayerShape> level_shapes(int h, int w) const;

  // Inspection of the most recent forward pass.
  const Tensor& encoder_output(int level) const;  // e_level, 1..K+1
  const Tensor& upsampled(int level) const;       // deconv output of unit, 1..K
  const Tensor& unit_output(int level) const;     // d_level, 1..K

  ConvBlock& reduce_block(int level);
  ConvTranspose2d& output_layer() { return output_; }
  Conv2d& input_tap() { return tap_; }

  // Turns the elementwise subtraction off in every unit (wiring harness).
  void set_subtraction_enabled(bool enabled) { subtraction_enabled_ = enabled; }
  bool subtracts(int level) const;

 private:
  struct UpBlock {
    ConvTranspose2d deconv;
    FeatureNorm norm;
    LeakyRelu act;
    Dropout dropout;
    bool use_dropout = false;
  };

  GeneratorSpec spec_;
  bool subtraction_enabled_ = true;
  Conv2d tap_;
  std::vector<ConvBlock> encoder_;  // index j - 1 for conv j
  std::vector<UpBlock> up_;         // index i - 1 for unit i
  std::vector<ConvBlock> reduce_;   // index i - 1 for unit i
  ConvTranspose2d output_;

  Tensor input_;
  std::vector<Tensor> enc_out_;
  std::vector<Tensor> up_out_;
  std::vector<Tensor> dec_out_;
  Tensor dehazed_;
};

}  // namespace dehaze

#endif  // DEHAZE_GENERATOR_H_
