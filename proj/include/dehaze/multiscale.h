#ifndef DEHAZE_MULTISCALE_H_
#define DEHAZE_MULTISCALE_H_

// Three-scale fusion generator: UR-Net-7*, 6*, 5* on the haze image at scales
// 1, 1/2 and 1/4. Their haze maps are upsampled to the native size and fused
// by a 1x1 convolution; the fused output is rebuilt from the native haze
// image as J = I - exp(I^r_1) + exp(I^r_1 - M_fusion). Each of the four
// outputs has its own discriminator.

#include <array>
#include <cstdint>

#include "dehaze/discriminator.h"
#include "dehaze/generator.h"
#include "dehaze/layers.h"
#include "dehaze/model.h"

namespace dehaze {

// Native image plus bicubic downsamples to ceil(n / 2) and ceil(n / 4).
struct Pyramid {
  Tensor level1;
  Tensor level2;
  Tensor level3;

  const Tensor& operator[](int k) const { return k == 0 ? level1 : (k == 1 ? level2 : level3); }
};

Pyramid build_pyramid(const Tensor& image);

struct FusionOutputs {
  std::array<GeneratorOutput, 3> scales;  // dehazed, i_r, j_g, m per scale
  Tensor m_fusion;
  Tensor j_g_fusion;  // i_r of scale 1 minus m_fusion
  Tensor hf_fusion;

  const Tensor& hf(int k) const { return scales[k].dehazed; }
};

struct MultiScaleSpec {
  std::array<GeneratorSpec, 3> generators;
  DiscriminatorSpec discriminator;

  // UR-Net-7*, 6*, 5* and four copies of the discriminator spec.
  static MultiScaleSpec canonical(int width_divisor = 1);
};

class MultiScaleGenerator {
 public:
  explicit MultiScaleGenerator(const std::array<GeneratorSpec, 3>& specs);

  void initialize(std::uint64_t seed, double stddev = 0.02);
  FusionOutputs forward(const Pyramid& haze, const NoiseSource& noise);

  struct OutputGrads {
    std::array<Tensor, 3> d_hf, d_i_r, d_j_g;
    Tensor d_hf_fusion, d_i_r_fusion, d_j_g_fusion;
  };
  void backward(const OutputGrads& grads);

  // Fusion weights that average the three maps per channel.
  void set_fusion_average();
  // Fusion weights that copy the maps of scale k (0-based) only.
  void set_fusion_select(int k);

  Generator& scale(int k) { return generators_[k]; }
  Conv2d& fusion() { return fusion_; }
  ParameterList parameters();

 private:
  std::array<Generator, 3> generators_;
  Conv2d fusion_;
  Tensor haze1_;
  FusionOutputs cache_;
};

// Sum of the single-scale objective over the four (output, target,
// discriminator) triples plus lambda_wd * weight_norm once. With `grads` the
// per-output gradients are filled in (and discriminator gradients accrue).
LossBreakdown multiscale_loss(const FusionOutputs& outputs, const Pyramid& haze,
                              const Pyramid& clear,
                              const std::array<Discriminator*, 4>& discriminators,
                              const LossWeights& weights, const SsimOptions& ssim,
                              double weight_norm,
                              MultiScaleGenerator::OutputGrads* grads = nullptr);

class MultiScaleCgan : public CganModel {
 public:
  explicit MultiScaleCgan(const MultiScaleSpec& spec);

  std::string kind() const override { return "multiscale"; }
  void initialize(std::uint64_t seed) override;
  void generate(const Tensor& haze, const NoiseSource& noise) override;
  double discriminator_backward(const Tensor& haze, const Tensor& clear) override;
  LossBreakdown generator_backward(const Tensor& haze, const Tensor& clear,
                                   const LossWeights& weights) override;
  Tensor dehaze(const Tensor& haze, const NoiseSource& noise) override;
  Tensor haze_map(const Tensor& haze, const NoiseSource& noise) override;
  ParameterList generator_parameters() override { return generator_.parameters(); }
  ParameterList discriminator_parameters() override;
  std::vector<NamedSection> sections() override;
  int min_input_size() const override;

  MultiScaleGenerator& generator() { return generator_; }
  Discriminator& discriminator(int k) { return discriminators_[k]; }
  const FusionOutputs& last_output() const { return outputs_; }

 private:
  std::array<Discriminator*, 4> discriminator_ptrs();

  MultiScaleGenerator generator_;
  std::array<Discriminator, 4> discriminators_;
  Pyramid haze_;
  FusionOutputs outputs_;
};

}  // namespace dehaze

#endif  // DEHAZE_MULTISCALE_H_
