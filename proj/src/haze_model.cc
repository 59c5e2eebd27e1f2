#include "dehaze/haze_model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dehaze {
namespace {

void require_map_matches(const Tensor& image, int h, int w, const char* what) {
  require_image(image, what);
  if (image.height() != h || image.width() != w) {
    std::ostringstream msg;
    msg << what << ": map is " << h << "x" << w << " but image is "
        << image.height() << "x" << image.width();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

TransmissionMap::TransmissionMap(Tensor values) : values_(std::move(values)) {
  if (values_.channels() != 1 || values_.height() < 1 || values_.width() < 1) {
    throw std::invalid_argument("transmission map must be 1 x H x W, got " +
                                values_.shape().str());
  }
  for (double v : values_.values()) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw std::invalid_argument("transmission value " + std::to_string(v) +
                                  " outside (0, 1]");
    }
  }
}

TransmissionMap TransmissionMap::uniform(int height, int width, double t) {
  return TransmissionMap(Tensor(1, height, width, t));
}

DepthMap::DepthMap(Tensor values) : values_(std::move(values)) {
  if (values_.channels() != 1 || values_.height() < 1 || values_.width() < 1) {
    throw std::invalid_argument("depth map must be 1 x H x W, got " +
                                values_.shape().str());
  }
  for (double v : values_.values()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("depth value " + std::to_string(v) +
                                  " is negative or non-finite");
    }
  }
}

DepthMap DepthMap::uniform(int height, int width, double d) {
  return DepthMap(Tensor(1, height, width, d));
}

void ScatteringParams::validate() const {
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("atmospheric light must be > 0 in every channel");
    }
  }
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
}

Tensor apply_scattering(const Tensor& clear, const TransmissionMap& t,
                        const ScatteringParams& params) {
  params.validate();
  require_map_matches(clear, t.height(), t.width(), "apply_scattering");
  Tensor out(clear.shape());
  for (int c = 0; c < 3; ++c) {
    const double a = params.alpha[c];
    for (int y = 0; y < clear.height(); ++y) {
      for (int x = 0; x < clear.width(); ++x) {
        const double tx = t(y, x);
        out.at(c, y, x) = clear.at(c, y, x) * tx + a * (1.0 - tx);
      }
    }
  }
  return out;
}

Tensor invert_scattering(const Tensor& haze, const TransmissionMap& t,
                         const ScatteringParams& params) {
  params.validate();
  require_map_matches(haze, t.height(), t.width(), "invert_scattering");
  if (t.values().min() < kMinTransmission) {
    std::ostringstream msg;
    msg << "invert_scattering: transmission " << t.values().min()
        << " below the floor t_min = " << kMinTransmission;
    throw std::domain_error(msg.str());
  }
  Tensor out(haze.shape());
  for (int c = 0; c < 3; ++c) {
    const double a = params.alpha[c];
    for (int y = 0; y < haze.height(); ++y) {
      for (int x = 0; x < haze.width(); ++x) {
        const double inv = 1.0 / t(y, x);
        out.at(c, y, x) = haze.at(c, y, x) * inv + a * (1.0 - inv);
      }
    }
  }
  return out;
}

TransmissionMap transmission_from_depth(const DepthMap& depth, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("scattering coefficient must be >= 0, got " +
                                std::to_string(beta));
  }
  Tensor t(1, depth.height(), depth.width());
  const auto& d = depth.values();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::exp(-beta * d[i]);
  // Very large beta * d underflows to 0; keep the map inside (0, 1].
  for (double& v : t.values()) v = std::max(v, std::numeric_limits<double>::min());
  return TransmissionMap(std::move(t));
}

double accumulate_error(const EstimationErrors& e) {
  if (!(e.delta_t >= 0.0) || !(e.delta_alpha >= 0.0) ||
      !std::isfinite(e.delta_t) || !std::isfinite(e.delta_alpha)) {
    throw std::invalid_argument("estimation errors must be finite and nonnegative");
  }
  return e.delta_t + e.delta_alpha + e.delta_t * e.delta_alpha;
}

Tensor haze_map(const Tensor& i_r, const Tensor& j_g) {
  require_image(i_r, "haze_map");
  require_same_shape(i_r, j_g, "haze_map");
  return i_r - j_g;
}

ScatteringParams sample_scattering(std::mt19937_64& rng,
                                   const SynthesisOptions& options) {
  std::uniform_real_distribution<double> alpha(options.alpha_min, options.alpha_max);
  std::uniform_real_distribution<double> beta(options.beta_min, options.beta_max);
  const double a = alpha(rng);
  const double b = beta(rng);
  return ScatteringParams::gray(a, b);
}

DepthMap synthetic_depth(int height, int width, const SynthesisOptions& options) {
  Tensor d(1, height, width, options.depth);
  if (options.depth_ramp != 0.0 && height > 1) {
    for (int y = 0; y < height; ++y) {
      const double ramp =
          options.depth_ramp * static_cast<double>(height - 1 - y) / (height - 1);
      for (int x = 0; x < width; ++x) d.at(0, y, x) += ramp;
    }
  }
  return DepthMap(std::move(d));
}

HazyPair synthesize_pair(const Tensor& clear, const ScatteringParams& params,
                         const std::optional<DepthMap>& depth,
                         const SynthesisOptions& options) {
  require_image(clear, "synthesize_pair");
  const DepthMap d =
      depth ? *depth : synthetic_depth(clear.height(), clear.width(), options);
  const TransmissionMap t = transmission_from_depth(d, params.beta);
  return {apply_scattering(clear, t, params), clear};
}

}  // namespace dehaze
