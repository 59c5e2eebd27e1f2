#include "dehaze/multiscale.h"

#include <algorithm>
#include <stdexcept>

#include "dehaze/resize.h"

namespace dehaze {
namespace {

int ceil_div(int n, int d) { return (n + d - 1) / d; }

Tensor clamped_exp_map(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = clamped_exp(t[i]);
  return out;
}

void add_parts(LossParts& sum, const LossParts& p) {
  sum.consistency += p.consistency;
  sum.adversarial_g += p.adversarial_g;
  sum.adversarial_d += p.adversarial_d;
  sum.l1 += p.l1;
  sum.ssim_loss += p.ssim_loss;
  sum.psnr_loss += p.psnr_loss;
}

}  // namespace

Pyramid build_pyramid(const Tensor& image) {
  if (image.height() < 4 || image.width() < 4) {
    throw std::invalid_argument("build_pyramid: image " + image.shape().str() +
                                " is smaller than 4x4");
  }
  Pyramid p;
  p.level1 = image;
  p.level2 = resize_bicubic(image, ceil_div(image.height(), 2), ceil_div(image.width(), 2));
  p.level3 = resize_bicubic(image, ceil_div(image.height(), 4), ceil_div(image.width(), 4));
  return p;
}

MultiScaleSpec MultiScaleSpec::canonical(int width_divisor) {
  MultiScaleSpec spec;
  for (int k = 0; k < 3; ++k) {
    spec.generators[k] = GeneratorSpec::canonical(7 - k, true, width_divisor);
  }
  spec.discriminator = DiscriminatorSpec::canonical(width_divisor);
  return spec;
}

MultiScaleGenerator::MultiScaleGenerator(const std::array<GeneratorSpec, 3>& specs)
    : generators_{Generator(specs[0]), Generator(specs[1]), Generator(specs[2])},
      fusion_("g.fusion", 9, 3, 1, 1, true) {
  set_fusion_average();
}

void MultiScaleGenerator::initialize(std::uint64_t seed, double stddev) {
  for (int k = 0; k < 3; ++k) generators_[k].initialize(mix_seed(seed, 10 + k), stddev);
  set_fusion_average();
}

void MultiScaleGenerator::set_fusion_average() {
  auto& w = fusion_.weight().value;
  std::fill(w.begin(), w.end(), 0.0);
  for (int o = 0; o < 3; ++o) {
    for (int k = 0; k < 3; ++k) w[o * 9 + 3 * k + o] = 1.0 / 3.0;
  }
  std::fill(fusion_.bias().value.begin(), fusion_.bias().value.end(), 0.0);
}

void MultiScaleGenerator::set_fusion_select(int k) {
  if (k < 0 || k > 2) throw std::out_of_range("fusion scale index");
  auto& w = fusion_.weight().value;
  std::fill(w.begin(), w.end(), 0.0);
  for (int o = 0; o < 3; ++o) w[o * 9 + 3 * k + o] = 1.0;
  std::fill(fusion_.bias().value.begin(), fusion_.bias().value.end(), 0.0);
}

FusionOutputs MultiScaleGenerator::forward(const Pyramid& haze, const NoiseSource& noise) {
  const int h = haze.level1.height();
  const int w = haze.level1.width();
  if (haze.level2.height() != ceil_div(h, 2) || haze.level2.width() != ceil_div(w, 2) ||
      haze.level3.height() != ceil_div(h, 4) || haze.level3.width() != ceil_div(w, 4)) {
    throw std::invalid_argument("multiscale forward: pyramid scales do not match " +
                                haze.level1.shape().str());
  }
  FusionOutputs out;
  for (int k = 0; k < 3; ++k) {
    out.scales[k] = generators_[k].forward(haze[k], NoiseSource{mix_seed(noise.seed, k)});
  }
  const Tensor up2 = resize_bicubic(out.scales[1].m, h, w);
  const Tensor up3 = resize_bicubic(out.scales[2].m, h, w);
  const Tensor* parts[] = {&out.scales[0].m, &up2, &up3};
  out.m_fusion = fusion_.forward(concat_channels(parts));
  out.j_g_fusion = out.scales[0].i_r - out.m_fusion;
  out.hf_fusion = haze.level1 - clamped_exp_map(out.scales[0].i_r) +
                  clamped_exp_map(out.j_g_fusion);
  haze1_ = haze.level1;
  cache_ = out;
  return out;
}

void MultiScaleGenerator::backward(const OutputGrads& g) {
  const FusionOutputs& c = cache_;
  const Tensor& i_r1 = c.scales[0].i_r;
  Tensor d_jgf = g.d_j_g_fusion;
  Tensor d_ir1 = g.d_i_r[0] + g.d_i_r_fusion;
  for (std::size_t i = 0; i < d_jgf.size(); ++i) {
    d_jgf[i] += g.d_hf_fusion[i] * clamped_exp_derivative(c.j_g_fusion[i]);
    d_ir1[i] += d_jgf[i] - g.d_hf_fusion[i] * clamped_exp_derivative(i_r1[i]);
  }
  const Tensor d_cat = fusion_.backward(d_jgf * -1.0);
  std::array<Tensor, 3> d_m;
  d_m[0] = slice_channels(d_cat, 0, 3);
  for (int k = 1; k < 3; ++k) {
    const Tensor& m = c.scales[k].m;
    d_m[k] = resize_bicubic_adjoint(slice_channels(d_cat, 3 * k, 3), m.height(), m.width());
  }
  for (int k = 0; k < 3; ++k) {
    const Tensor d_ir = (k == 0 ? d_ir1 : g.d_i_r[k]) + d_m[k];
    const Tensor d_jg = g.d_j_g[k] - d_m[k];
    generators_[k].backward(g.d_hf[k], d_ir, d_jg);
  }
}

ParameterList MultiScaleGenerator::parameters() {
  ParameterList list;
  for (auto& g : generators_) {
    ParameterList p = g.parameters();
    list.insert(list.end(), p.begin(), p.end());
  }
  fusion_.collect(list);
  return list;
}

LossBreakdown multiscale_loss(const FusionOutputs& outputs, const Pyramid& haze,
                              const Pyramid& clear,
                              const std::array<Discriminator*, 4>& discriminators,
                              const LossWeights& weights, const SsimOptions& ssim,
                              double weight_norm, MultiScaleGenerator::OutputGrads* grads) {
  const bool with_grad = grads != nullptr;
  LossParts sum;
  for (int k = 0; k < 3; ++k) {
    const GeneratorOutput& s = outputs.scales[k];
    ObjectiveResult r = cgan_objective(haze[k], clear[k], s.dehazed, s.i_r, s.j_g,
                                       *discriminators[k], weights, ssim, with_grad);
    add_parts(sum, r.parts);
    if (with_grad) {
      grads->d_hf[k] = std::move(r.d_output);
      grads->d_i_r[k] = std::move(r.d_i_r);
      grads->d_j_g[k] = std::move(r.d_j_g);
    }
  }
  ObjectiveResult r = cgan_objective(haze.level1, clear.level1, outputs.hf_fusion,
                                     outputs.scales[0].i_r, outputs.j_g_fusion,
                                     *discriminators[3], weights, ssim, with_grad);
  add_parts(sum, r.parts);
  if (with_grad) {
    grads->d_hf_fusion = std::move(r.d_output);
    grads->d_i_r_fusion = std::move(r.d_i_r);
    grads->d_j_g_fusion = std::move(r.d_j_g);
  }
  sum.weight_decay = weight_norm;
  return total_generator_loss(sum, weights);
}

MultiScaleCgan::MultiScaleCgan(const MultiScaleSpec& spec)
    : generator_(spec.generators),
      discriminators_{Discriminator(spec.discriminator), Discriminator(spec.discriminator),
                      Discriminator(spec.discriminator), Discriminator(spec.discriminator)} {
  for (const auto& g : spec.generators) {
    if (!g.star) throw std::invalid_argument("multiscale generators must be star variants");
  }
}

void MultiScaleCgan::initialize(std::uint64_t seed) {
  generator_.initialize(mix_seed(seed, 1));
  for (int k = 0; k < 4; ++k) discriminators_[k].initialize(mix_seed(seed, 20 + k));
}

std::array<Discriminator*, 4> MultiScaleCgan::discriminator_ptrs() {
  return {&discriminators_[0], &discriminators_[1], &discriminators_[2], &discriminators_[3]};
}

void MultiScaleCgan::generate(const Tensor& haze, const NoiseSource& noise) {
  haze_ = build_pyramid(haze);
  outputs_ = generator_.forward(haze_, noise);
}

double MultiScaleCgan::discriminator_backward(const Tensor& haze, const Tensor& clear) {
  require_same_shape(haze, haze_.level1, "multiscale discriminator pass");
  const Pyramid target = build_pyramid(clear);
  double loss = 0.0;
  for (int k = 0; k < 3; ++k) {
    loss += discriminator_objective(haze_[k], target[k], outputs_.hf(k), discriminators_[k]);
  }
  loss += discriminator_objective(haze_.level1, target.level1, outputs_.hf_fusion,
                                  discriminators_[3]);
  return loss;
}

LossBreakdown MultiScaleCgan::generator_backward(const Tensor& haze, const Tensor& clear,
                                                 const LossWeights& weights) {
  require_same_shape(haze, haze_.level1, "multiscale generator pass");
  const Pyramid target = build_pyramid(clear);
  const ParameterList params = generator_.parameters();
  MultiScaleGenerator::OutputGrads grads;
  LossBreakdown b = multiscale_loss(outputs_, haze_, target, discriminator_ptrs(), weights,
                                    ssim_, squared_weight_norm(params), &grads);
  generator_.backward(grads);
  add_weight_decay_grad(params, weights.lambda_wd);
  return b;
}

Tensor MultiScaleCgan::dehaze(const Tensor& haze, const NoiseSource& noise) {
  return generator_.forward(build_pyramid(haze), noise).hf_fusion;
}

Tensor MultiScaleCgan::haze_map(const Tensor& haze, const NoiseSource& noise) {
  return generator_.forward(build_pyramid(haze), noise).m_fusion;
}

ParameterList MultiScaleCgan::discriminator_parameters() {
  ParameterList list;
  for (auto& d : discriminators_) {
    ParameterList p = d.parameters();
    list.insert(list.end(), p.begin(), p.end());
  }
  return list;
}

std::vector<NamedSection> MultiScaleCgan::sections() {
  std::vector<NamedSection> s;
  for (int k = 0; k < 3; ++k) {
    s.push_back({"generator.scale" + std::to_string(k + 1), generator_.scale(k).parameters()});
  }
  ParameterList fusion;
  generator_.fusion().collect(fusion);
  s.push_back({"fusion", fusion});
  for (int k = 0; k < 4; ++k) {
    s.push_back({"discriminator." + std::to_string(k + 1), discriminators_[k].parameters()});
  }
  return s;
}

int MultiScaleCgan::min_input_size() const {
  const int per_scale =
      std::max(discriminators_[0].spec().min_input_size(), ssim_.window);
  int n = 4;
  while (ceil_div(n, 4) < per_scale) ++n;
  return n;
}

}  // namespace dehaze
