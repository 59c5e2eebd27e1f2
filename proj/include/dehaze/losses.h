#ifndef DEHAZE_LOSSES_H_
#define DEHAZE_LOSSES_H_

// Training objectives. Image losses are evaluated on the network's [-1, 1]
// domain and return their gradient with respect to the generated image so the
// trainer can backpropagate them.

#include <string>

#include "dehaze/tensor.h"

namespace dehaze {

// Conv outputs are clipped to this range before exponentiation.
inline constexpr double kExpClampLow = -20.0;
inline constexpr double kExpClampHigh = 10.0;
// Floors used by the PSNR loss.
inline constexpr double kMseFloor = 1e-10;
inline constexpr double kRangeFloor = 1e-6;
// Probability guard for the adversarial logs.
inline constexpr double kProbEpsilon = 1e-12;

struct LossWeights {
  double lambda1 = 1.0;      // adversarial
  double lambda2 = 100.0;    // L1
  double lambda3 = 100.0;    // SSIM
  double lambda4 = 100.0;    // PSNR
  double lambda_wd = 0.001;  // weight decay (multi-scale training only)
  double thresh = 40.0;      // PSNR normalizer

  void validate() const;
};

struct LossBreakdown {
  double consistency = 0.0;
  double adversarial_g = 0.0;
  double adversarial_d = 0.0;
  double l1 = 0.0;
  double ssim_loss = 0.0;
  double psnr_loss = 0.0;
  double weight_decay = 0.0;  // squared generator weight norm
  double total = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

// exp(clamp(v)) and its derivative (zero where the clamp is active).
double clamped_exp(double v);
double clamped_exp_derivative(double v);

struct ConsistencyResult {
  double value = 0.0;
  Tensor d_dehazed;
  Tensor d_i_r;
  Tensor d_j_g;
};

// mean | haze - exp(i_r) - dehazed + exp(j_g) |
ConsistencyResult consistency_loss(const Tensor& haze, const Tensor& dehazed,
                                   const Tensor& i_r, const Tensor& j_g);

struct AdversarialLosses {
  double d_loss = 0.0;  // -[log d_real + log(1 - d_fake)]
  double g_loss = 0.0;  // -log d_fake
};

AdversarialLosses adversarial_losses(double d_real, double d_fake);

// Derivatives of the adversarial terms with respect to discriminator logits.
double g_loss_logit_grad(double fake_logit);
double d_loss_real_logit_grad(double real_logit);
double d_loss_fake_logit_grad(double fake_logit);

struct ImageLoss {
  double value = 0.0;
  Tensor d_output;  // gradient with respect to the generated image
};

ImageLoss l1_loss(const Tensor& target, const Tensor& output);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double dynamic_range = 2.0;  // L: 2 on [-1, 1], 255 on bytes
};

// Mean local SSIM over every fully contained Gaussian window, averaged over
// channels. Both sides must be at least window x window.
double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options = {});
// 1 - ssim(target, output) with its gradient with respect to `output`.
ImageLoss ssim_loss(const Tensor& target, const Tensor& output,
                    const SsimOptions& options = {});

// 10 log10((max(target) - min(target))^2 / MSE), using the target's range.
double psnr_value(const Tensor& target, const Tensor& output);
// 1 - psnr_value / thresh with its gradient with respect to `output`.
ImageLoss psnr_loss(const Tensor& target, const Tensor& output, double thresh);

struct LossParts {
  double consistency = 0.0;
  double adversarial_g = 0.0;
  double adversarial_d = 0.0;
  double l1 = 0.0;
  double ssim_loss = 0.0;
  double psnr_loss = 0.0;
  double weight_decay = 0.0;
};

// Weighted total; throws std::domain_error naming the first non-finite part.
LossBreakdown total_generator_loss(const LossParts& parts, const LossWeights& weights);

// Names the first non-finite field of a breakdown, or returns empty.
std::string first_non_finite(const LossBreakdown& b);

}  // namespace dehaze

#endif  // DEHAZE_LOSSES_H_
