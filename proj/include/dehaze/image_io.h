#ifndef DEHAZE_IMAGE_IO_H_
#define DEHAZE_IMAGE_IO_H_

// 8-bit image files <-> tensors. Files hold byte_scale values [0, 255]; the
// network works on unit_signed values [-1, 1].

#include <cstdint>
#include <stdexcept>
#include <string>

#include "dehaze/tensor.h"

namespace dehaze {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// v / 127.5 - 1.
double to_unit_signed(double byte_value);
// clamp((v + 1) * 127.5, 0, 255) rounded half away from zero.
std::uint8_t to_byte(double unit_value);

Tensor to_unit_signed(const Tensor& bytes);
// Same map element-wise, still stored as doubles.
Tensor to_byte_scale(const Tensor& unit);

// RGB, channel-major, values 0..255. Grayscale files are expanded to RGB.
Tensor read_image_bytes(const std::string& path);
Tensor read_image_unit(const std::string& path);
// Writes a 1- or 3-channel byte_scale tensor (values rounded and clamped).
void write_image_bytes(const std::string& path, const Tensor& bytes);
void write_image_unit(const std::string& path, const Tensor& unit);

}  // namespace dehaze

#endif  // DEHAZE_IMAGE_IO_H_
