#include "dehaze/model.h"

#include <algorithm>

namespace dehaze {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ObjectiveResult cgan_objective(const Tensor& haze, const Tensor& clear,
                               const Tensor& output, const Tensor& i_r,
                               const Tensor& j_g, Discriminator& d,
                               const LossWeights& weights, const SsimOptions& ssim,
                               bool with_grad) {
  require_same_shape(haze, clear, "objective (clear)");
  require_same_shape(haze, output, "objective (output)");
  ObjectiveResult r;

  const double p_real = d.discriminate(haze, clear);
  const double fake_logit = d.forward(haze, output);
  const AdversarialLosses adv = adversarial_losses(p_real, sigmoid(fake_logit));
  r.parts.adversarial_g = adv.g_loss;
  r.parts.adversarial_d = adv.d_loss;

  ConsistencyResult cons = consistency_loss(haze, output, i_r, j_g);
  ImageLoss l1 = l1_loss(clear, output);
  ImageLoss ss = ssim_loss(clear, output, ssim);
  ImageLoss ps = psnr_loss(clear, output, weights.thresh);
  r.parts.consistency = cons.value;
  r.parts.l1 = l1.value;
  r.parts.ssim_loss = ss.value;
  r.parts.psnr_loss = ps.value;

  if (with_grad) {
    Tensor adv_grad =
        d.backward(weights.lambda1 * g_loss_logit_grad(fake_logit)).candidate;
    r.d_output = std::move(cons.d_dehazed);
    for (std::size_t i = 0; i < r.d_output.size(); ++i) {
      r.d_output[i] += adv_grad[i] + weights.lambda2 * l1.d_output[i] +
                       weights.lambda3 * ss.d_output[i] +
                       weights.lambda4 * ps.d_output[i];
    }
    r.d_i_r = std::move(cons.d_i_r);
    r.d_j_g = std::move(cons.d_j_g);
  }
  return r;
}

double discriminator_objective(const Tensor& haze, const Tensor& clear,
                               const Tensor& fake, Discriminator& d) {
  const double real_logit = d.forward(haze, clear);
  d.backward(d_loss_real_logit_grad(real_logit));
  const double fake_logit = d.forward(haze, fake);
  d.backward(d_loss_fake_logit_grad(fake_logit));
  return adversarial_losses(sigmoid(real_logit), sigmoid(fake_logit)).d_loss;
}

SingleScaleCgan::SingleScaleCgan(GeneratorSpec g, DiscriminatorSpec d)
    : generator_(std::move(g)), discriminator_(d) {}

void SingleScaleCgan::initialize(std::uint64_t seed) {
  generator_.initialize(mix_seed(seed, 1));
  discriminator_.initialize(mix_seed(seed, 2));
}

void SingleScaleCgan::generate(const Tensor& haze, const NoiseSource& noise) {
  output_ = generator_.forward(haze, noise);
}

double SingleScaleCgan::discriminator_backward(const Tensor& haze, const Tensor& clear) {
  return discriminator_objective(haze, clear, output_.dehazed, discriminator_);
}

LossBreakdown SingleScaleCgan::generator_backward(const Tensor& haze, const Tensor& clear,
                                                  const LossWeights& weights) {
  ObjectiveResult r = cgan_objective(haze, clear, output_.dehazed, output_.i_r,
                                     output_.j_g, discriminator_, weights, ssim_, true);
  LossBreakdown b = total_generator_loss(r.parts, weights);
  generator_.backward(r.d_output, r.d_i_r, r.d_j_g);
  return b;
}

Tensor SingleScaleCgan::dehaze(const Tensor& haze, const NoiseSource& noise) {
  return generator_.forward(haze, noise).dehazed;
}

Tensor SingleScaleCgan::haze_map(const Tensor& haze, const NoiseSource& noise) {
  return generator_.forward(haze, noise).m;
}

std::vector<NamedSection> SingleScaleCgan::sections() {
  return {{"generator", generator_.parameters()},
          {"discriminator", discriminator_.parameters()}};
}

int SingleScaleCgan::min_input_size() const {
  return std::max(discriminator_.spec().min_input_size(), ssim_.window);
}

}  // namespace dehaze
