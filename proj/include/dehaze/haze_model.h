#ifndef DEHAZE_HAZE_MODEL_H_
#define DEHAZE_HAZE_MODEL_H_

// Atmospheric scattering model: haze synthesis, its inversion, and the
// log-domain haze map residual.
//
// Synthesis works on unit scale images ([0, 1] per channel).

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>

#include "dehaze/tensor.h"

namespace dehaze {

// Smallest transmission accepted by invert_scattering.
inline constexpr double kMinTransmission = 1e-2;

// Single-channel per-pixel transmission, every value in (0, 1].
class TransmissionMap {
 public:
  explicit TransmissionMap(Tensor values);
  static TransmissionMap uniform(int height, int width, double t);

  const Tensor& values() const { return values_; }
  int height() const { return values_.height(); }
  int width() const { return values_.width(); }
  double operator()(int y, int x) const { return values_.at(0, y, x); }

 private:
  Tensor values_;
};

// Single-channel scene distance, nonnegative and finite.
class DepthMap {
 public:
  explicit DepthMap(Tensor values);
  static DepthMap uniform(int height, int width, double d);

  const Tensor& values() const { return values_; }
  int height() const { return values_.height(); }
  int width() const { return values_.width(); }
  double operator()(int y, int x) const { return values_.at(0, y, x); }

 private:
  Tensor values_;
};

struct ScatteringParams {
  std::array<double, 3> alpha{1.0, 1.0, 1.0};  // atmospheric light per channel
  double beta = 1.0;                           // scattering coefficient

  static ScatteringParams gray(double alpha, double beta) {
    return {{alpha, alpha, alpha}, beta};
  }
  void validate() const;
};

struct EstimationErrors {
  double delta_t = 0.0;
  double delta_alpha = 0.0;
};

// I(x) = J(x) t(x) + alpha (1 - t(x)).
Tensor apply_scattering(const Tensor& clear, const TransmissionMap& t,
                        const ScatteringParams& params);

// J(x) = I(x) / t(x) + alpha (1 - 1 / t(x)). Requires t >= kMinTransmission.
Tensor invert_scattering(const Tensor& haze, const TransmissionMap& t,
                         const ScatteringParams& params);

// t(x) = exp(-beta d(x)).
TransmissionMap transmission_from_depth(const DepthMap& depth, double beta);

// Total relative error when transmission and atmospheric light are estimated
// separately: delta = delta_t + delta_alpha + delta_t * delta_alpha.
double accumulate_error(const EstimationErrors& e);

// M(x) = I^r(x) - J^g(x).
Tensor haze_map(const Tensor& i_r, const Tensor& j_g);

struct SynthesisOptions {
  double beta_min = 0.6;
  double beta_max = 1.6;
  double alpha_min = 0.7;
  double alpha_max = 1.0;
  double depth = 0.6;       // constant depth used when no map is given
  double depth_ramp = 0.0;  // extra depth added linearly from bottom to top row
};

// Samples alpha (gray) and beta uniformly from the configured ranges.
ScatteringParams sample_scattering(std::mt19937_64& rng,
                                   const SynthesisOptions& options);

// Constant depth plus an optional linear vertical ramp (top rows farther).
DepthMap synthetic_depth(int height, int width, const SynthesisOptions& options);

struct HazyPair {
  Tensor haze;
  Tensor clear;
};

// Builds a (haze, clear) training pair on unit scale. Without an explicit
// depth map the synthetic depth from `options` is used.
HazyPair synthesize_pair(const Tensor& clear, const ScatteringParams& params,
                         const std::optional<DepthMap>& depth,
                         const SynthesisOptions& options = {});

}  // namespace dehaze

#endif  // DEHAZE_HAZE_MODEL_H_
