#include "dehaze/resize.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dehaze {
namespace {

constexpr double kCubicA = -0.5;

double cubic(double x) {
  x = std::abs(x);
  if (x <= 1.0) return ((kCubicA + 2.0) * x - (kCubicA + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((kCubicA * x - 5.0 * kCubicA) * x + 8.0 * kCubicA) * x - 4.0 * kCubicA;
  return 0.0;
}

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> axis_taps(int in, int out) {
  std::vector<Taps> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) * scale - 0.5;
    const double base = std::floor(center);
    const double t = center - base;
    for (int k = 0; k < 4; ++k) {
      const int i = static_cast<int>(base) - 1 + k;
      taps[o].index[k] = std::clamp(i, 0, in - 1);
      taps[o].weight[k] = cubic(t - (k - 1));
    }
  }
  return taps;
}

void check_sizes(int in_h, int in_w, int out_h, int out_w) {
  if (in_h < 1 || in_w < 1 || out_h < 1 || out_w < 1) {
    throw std::invalid_argument("resize_bicubic: sizes must be positive");
  }
}

}  // namespace

Tensor resize_bicubic(const Tensor& src, int out_h, int out_w) {
  check_sizes(src.height(), src.width(), out_h, out_w);
  if (src.height() == out_h && src.width() == out_w) return src;
  const auto tx = axis_taps(src.width(), out_w);
  const auto ty = axis_taps(src.height(), out_h);
  Tensor rows(src.channels(), src.height(), out_w);
  for (int c = 0; c < src.channels(); ++c) {
    for (int y = 0; y < src.height(); ++y) {
      for (int x = 0; x < out_w; ++x) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += tx[x].weight[k] * src.at(c, y, tx[x].index[k]);
        rows.at(c, y, x) = s;
      }
    }
  }
  Tensor out(src.channels(), out_h, out_w);
  for (int c = 0; c < src.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += ty[y].weight[k] * rows.at(c, ty[y].index[k], x);
        out.at(c, y, x) = s;
      }
    }
  }
  return out;
}

Tensor resize_bicubic_adjoint(const Tensor& grad_out, int in_h, int in_w) {
  check_sizes(in_h, in_w, grad_out.height(), grad_out.width());
  if (grad_out.height() == in_h && grad_out.width() == in_w) return grad_out;
  const int out_h = grad_out.height();
  const int out_w = grad_out.width();
  const auto tx = axis_taps(in_w, out_w);
  const auto ty = axis_taps(in_h, out_h);
  Tensor rows(grad_out.channels(), in_h, out_w);
  for (int c = 0; c < grad_out.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        const double g = grad_out.at(c, y, x);
        for (int k = 0; k < 4; ++k) rows.at(c, ty[y].index[k], x) += ty[y].weight[k] * g;
      }
    }
  }
  Tensor grad_in(grad_out.channels(), in_h, in_w);
  for (int c = 0; c < grad_out.channels(); ++c) {
    for (int y = 0; y < in_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        const double g = rows.at(c, y, x);
        for (int k = 0; k < 4; ++k) grad_in.at(c, y, tx[x].index[k]) += tx[x].weight[k] * g;
      }
    }
  }
  return grad_in;
}

}  // namespace dehaze
