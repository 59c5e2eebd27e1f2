#ifndef DEHAZE_TENSOR_H_
#define DEHAZE_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dehaze {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense channel-major (C x H x W) raster of doubles. Used for images,
// feature maps and per-pixel maps alike.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0);
  explicit Tensor(Shape shape, double fill = 0.0)
      : Tensor(shape.channels, shape.height, shape.width, fill) {}

  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(shape_.height) * shape_.width;
  }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* plane(int c) { return data_.data() + c * plane_size(); }
  const double* plane(int c) const { return data_.data() + c * plane_size(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v);
  bool all_finite() const;
  double min() const;
  double max() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);

// Channel concatenation of equally sized tensors.
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor concat_channels(std::span<const Tensor* const> parts);
// Copy of channels [first, first + count).
Tensor slice_channels(const Tensor& t, int first, int count);

// Throws std::invalid_argument naming `what` when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what);
// Throws when the tensor is not a 3-channel, non-empty image.
void require_image(const Tensor& t, std::string_view what);
// Throws std::domain_error when any element is NaN or infinite.
void require_finite(const Tensor& t, std::string_view what);

}  // namespace dehaze

#endif  // DEHAZE_TENSOR_H_
