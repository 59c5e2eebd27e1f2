#include "dehaze/discriminator.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dehaze {

std::pair<int, int> spp_cell(int index, int cells, int size) {
  const long long lo = static_cast<long long>(index) * size / cells;
  const long long hi = (static_cast<long long>(index + 1) * size + cells - 1) / cells;
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

int spp_length(int channels, int levels) {
  int cells = 0;
  for (int n = 1; n <= levels; ++n) cells += n * n;
  return channels * cells;
}

SppResult spp_pool(const Tensor& features, int levels) {
  if (levels < 1) throw std::invalid_argument("spp_pool: levels must be >= 1");
  if (features.height() < levels || features.width() < levels) {
    throw std::invalid_argument(
        "spp_pool: feature map " + std::to_string(features.height()) + "x" +
        std::to_string(features.width()) + " is smaller than the " +
        std::to_string(levels) + "x" + std::to_string(levels) +
        " pyramid grid; enlarge the input image");
  }
  SppResult r;
  r.input_shape = features.shape();
  const int len = spp_length(features.channels(), levels);
  r.values.reserve(len);
  r.argmax.reserve(len);
  for (int n = 1; n <= levels; ++n) {
    for (int c = 0; c < features.channels(); ++c) {
      for (int gy = 0; gy < n; ++gy) {
        const auto [y0, y1] = spp_cell(gy, n, features.height());
        for (int gx = 0; gx < n; ++gx) {
          const auto [x0, x1] = spp_cell(gx, n, features.width());
          std::size_t best = static_cast<std::size_t>(c) * features.plane_size() +
                             static_cast<std::size_t>(y0) * features.width() + x0;
          double best_v = features[best];
          for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
              const std::size_t idx = static_cast<std::size_t>(c) * features.plane_size() +
                                      static_cast<std::size_t>(y) * features.width() + x;
              if (features[idx] > best_v) {
                best_v = features[idx];
                best = idx;
              }
            }
          }
          r.values.push_back(best_v);
          r.argmax.push_back(best);
        }
      }
    }
  }
  return r;
}

Tensor spp_backward(const SppResult& pooled, const std::vector<double>& grad) {
  if (grad.size() != pooled.values.size()) {
    throw std::invalid_argument("spp_backward: gradient length mismatch");
  }
  Tensor g(pooled.input_shape);
  for (std::size_t i = 0; i < grad.size(); ++i) g[pooled.argmax[i]] += grad[i];
  return g;
}

DiscriminatorSpec DiscriminatorSpec::canonical(int width_divisor) {
  if (width_divisor < 1) throw std::invalid_argument("width divisor must be >= 1");
  DiscriminatorSpec spec;
  for (int& c : spec.conv_channels) c = std::max(1, c / width_divisor);
  return spec;
}

void DiscriminatorSpec::validate() const {
  for (int c : conv_channels) {
    if (c < 1) throw std::invalid_argument("discriminator widths must be >= 1");
  }
  if (spp_levels < 1) throw std::invalid_argument("spp levels must be >= 1");
}

int DiscriminatorSpec::min_input_size() const {
  for (int s = 1;; ++s) {
    int n = s;
    for (int i = 0; i < 3; ++i) n = conv_output_size(n, 5, 2);
    n = conv_output_size(n, 5, 1);
    if (n >= spp_levels) return s;
  }
}

double sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

Discriminator::Discriminator(DiscriminatorSpec spec) : spec_(spec) {
  spec_.validate();
  int in = 6;
  for (int i = 0; i < 4; ++i) {
    const int stride = i < 3 ? 2 : 1;
    blocks_[i] = ConvBlock("d.conv" + std::to_string(i + 1), in,
                           spec_.conv_channels[i], 5, stride, spec_.leak);
    in = spec_.conv_channels[i];
  }
  head_ = Linear("d.head", spec_.head_width(), 1);
}

void Discriminator::initialize(std::uint64_t seed, double stddev) {
  std::mt19937_64 rng(seed);
  for (auto& b : blocks_) b.conv.init_normal(rng, stddev);
  head_.init_normal(rng, stddev);
}

double Discriminator::forward(const Tensor& condition, const Tensor& candidate) {
  require_image(condition, "discriminator condition");
  require_same_shape(condition, candidate, "discriminator pair");
  const int min_size = spec_.min_input_size();
  if (condition.height() < min_size || condition.width() < min_size) {
    throw std::invalid_argument(
        "discriminator input " + std::to_string(condition.height()) + "x" +
        std::to_string(condition.width()) + " is below the minimum " +
        std::to_string(min_size) + "x" + std::to_string(min_size));
  }
  condition_channels_ = condition.channels();
  Tensor x = concat_channels(condition, candidate);
  for (auto& b : blocks_) x = b.forward(x);
  pooled_ = spp_pool(x, spec_.spp_levels);
  return head_.forward(pooled_.values)[0];
}

double Discriminator::discriminate(const Tensor& condition, const Tensor& candidate) {
  return sigmoid(forward(condition, candidate));
}

Discriminator::InputGrad Discriminator::backward(double d_logit) {
  std::vector<double> g = head_.backward({d_logit});
  Tensor x = spp_backward(pooled_, g);
  for (int i = 3; i >= 0; --i) x = blocks_[i].backward(x);
  InputGrad out;
  out.condition = slice_channels(x, 0, condition_channels_);
  out.candidate = slice_channels(x, condition_channels_, x.channels() - condition_channels_);
  return out;
}

ParameterList Discriminator::parameters() {
  ParameterList list;
  for (auto& b : blocks_) b.collect(list);
  head_.collect(list);
  return list;
}

}  // namespace dehaze
