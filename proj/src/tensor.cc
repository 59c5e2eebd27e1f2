#include "dehaze/tensor.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dehaze {

std::string Shape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" +
         std::to_string(width);
}

Tensor::Tensor(int channels, int height, int width, double fill) {
  if (channels < 0 || height < 0 || width < 0) {
    throw std::invalid_argument("negative tensor dimension");
  }
  shape_ = {channels, height, width};
  data_.assign(shape_.size(), fill);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Tensor::min() const {
  if (data_.empty()) throw std::logic_error("min of empty tensor");
  return *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
  if (data_.empty()) throw std::logic_error("max of empty tensor");
  return *std::max_element(data_.begin(), data_.end());
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other, "tensor -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Tensor* parts[] = {&a, &b};
  return concat_channels(parts);
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw std::invalid_argument("concat of nothing");
  const int h = parts[0]->height();
  const int w = parts[0]->width();
  int total = 0;
  for (const Tensor* p : parts) {
    if (p->height() != h || p->width() != w) {
      throw std::invalid_argument("concat_channels: spatial size mismatch " +
                                  parts[0]->shape().str() + " vs " +
                                  p->shape().str());
    }
    total += p->channels();
  }
  Tensor out(total, h, w);
  double* dst = out.data();
  for (const Tensor* p : parts) {
    dst = std::copy(p->data(), p->data() + p->size(), dst);
  }
  return out;
}

Tensor slice_channels(const Tensor& t, int first, int count) {
  if (first < 0 || count < 0 || first + count > t.channels()) {
    throw std::out_of_range("slice_channels out of range");
  }
  Tensor out(count, t.height(), t.width());
  std::copy(t.plane(first), t.plane(first) + count * t.plane_size(), out.data());
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.shape().str() + " vs " + b.shape().str());
  }
}

void require_image(const Tensor& t, std::string_view what) {
  if (t.channels() != 3 || t.height() < 1 || t.width() < 1) {
    throw std::invalid_argument(std::string(what) +
                                ": expected a 3-channel image, got " +
                                t.shape().str());
  }
}

void require_finite(const Tensor& t, std::string_view what) {
  if (!t.all_finite()) {
    throw std::domain_error(std::string(what) + ": non-finite value");
  }
}

}  // namespace dehaze
