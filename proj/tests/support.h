#ifndef DEHAZE_TESTS_SUPPORT_H_
#define DEHAZE_TESTS_SUPPORT_H_

// Shared test helpers: random data, synthetic scenes and independent
// reference implementations written as plain scalar loops.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dehaze/layers.h"
#include "dehaze/tensor.h"
#include "dehaze/trainer.h"

namespace testing_support {

using dehaze::Tensor;

Tensor random_tensor(std::mt19937_64& rng, int c, int h, int w, double lo, double hi);
// Integer byte values 0..255 stored as doubles.
Tensor random_bytes(std::mt19937_64& rng, int c, int h, int w);

// Smooth colored scene in [0, 1] with a few soft shapes, seeded.
Tensor synthetic_scene(std::uint64_t seed, int h, int w);

// Hazy pairs built from synthetic scenes, quantized to 8 bits and returned
// on unit_signed scale as a file round trip would produce them.
std::vector<dehaze::TrainingPair> synthetic_pairs(int n, int h, int w, std::uint64_t seed);
std::vector<dehaze::TrainingPair> synthetic_pairs_mixed(int n, int min_side, int max_side,
                                                        std::uint64_t seed);

// Mean byte-scale PSNR of the model output (or of the haze image when
// `model` is null) against the clear images.
double mean_psnr_eval(dehaze::CganModel* model, const std::vector<dehaze::TrainingPair>& pairs,
                      std::uint64_t noise_seed);

// ---- reference implementations ----
double ref_l1(const Tensor& a, const Tensor& b);
double ref_consistency(const Tensor& haze, const Tensor& out, const Tensor& i_r,
                       const Tensor& j_g);
// Direct windowed SSIM: 2-D Gaussian weights evaluated per window position.
double ref_ssim(const Tensor& a, const Tensor& b, int window, double sigma, double range);
double ref_psnr_loss(const Tensor& target, const Tensor& output, double thresh);
double ref_mse(const Tensor& a, const Tensor& b);
double ref_nrmse(const Tensor& a, const Tensor& b);
double ref_psnr_eval(const Tensor& a, const Tensor& b);
// Exhaustive cell maxima in level-major, channel, cell order.
std::vector<double> ref_spp(const Tensor& x, int levels);
// Direct zero-padded strided convolution (pad = k / 2).
Tensor ref_conv(const Tensor& x, const std::vector<double>& weight, const std::vector<double>& bias,
                int out_c, int k, int stride);

// Central finite difference of f with respect to *x.
double central_difference(const std::function<double()>& f, double* x, double step);

// ||a - n|| / max(||a|| + ||n||, floor) over the sampled coordinates.
struct GradCheck {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double relative_error(double floor = 1e-10) const;
};

// Samples up to `per_param` coordinates of every parameter and compares its
// stored gradient against central differences of `loss`.
GradCheck check_parameters(const dehaze::ParameterList& params, const std::function<double()>& loss,
                           std::mt19937_64& rng, int per_param, double step);

std::string temp_dir(const std::string& tag);

}  // namespace testing_support

#endif  // DEHAZE_TESTS_SUPPORT_H_
