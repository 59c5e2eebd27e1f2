#ifndef DEHAZE_MODEL_H_
#define DEHAZE_MODEL_H_

// Trainable conditional-GAN dehazing models as seen by the trainer and the
// command-line tools: one single-scale UR-Net/SPP pair, or the three-scale
// fusion model (see multiscale.h).

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dehaze/discriminator.h"
#include "dehaze/generator.h"
#include "dehaze/losses.h"

namespace dehaze {

struct NamedSection {
  std::string name;
  ParameterList params;
};

// Everything the generator objective needs from one (output, target,
// discriminator) triple.
struct ObjectiveResult {
  LossParts parts;  // weight_decay left at zero
  Tensor d_output;  // weighted gradient w.r.t. the generated image
  Tensor d_i_r;
  Tensor d_j_g;
};

// Consistency + lambda-weighted adversarial, L1, SSIM and PSNR terms for one
// generated image. The discriminator is evaluated on (haze, clear) for the
// logged discriminator loss and on (haze, output); with `with_grad` the
// adversarial gradient is backpropagated through it into d_output, which
// also accumulates gradients in the discriminator's parameters (callers
// clear those before the discriminator update).
ObjectiveResult cgan_objective(const Tensor& haze, const Tensor& clear,
                               const Tensor& output, const Tensor& i_r,
                               const Tensor& j_g, Discriminator& d,
                               const LossWeights& weights, const SsimOptions& ssim,
                               bool with_grad);

// Accumulates discriminator gradients of -[log D(haze, clear) +
// log(1 - D(haze, fake))] and returns that loss.
double discriminator_objective(const Tensor& haze, const Tensor& clear,
                               const Tensor& fake, Discriminator& d);

class CganModel {
 public:
  virtual ~CganModel() = default;

  virtual std::string kind() const = 0;
  virtual void initialize(std::uint64_t seed) = 0;

  // Generator forward on a unit_signed haze image; results are cached for
  // the two passes below.
  virtual void generate(const Tensor& haze, const NoiseSource& noise) = 0;
  // Discriminator gradients on the cached fakes; returns the summed loss.
  virtual double discriminator_backward(const Tensor& haze, const Tensor& clear) = 0;
  // Generator gradients of the total objective on the cached forward.
  virtual LossBreakdown generator_backward(const Tensor& haze, const Tensor& clear,
                                           const LossWeights& weights) = 0;

  // Inference helpers (fresh forward pass).
  virtual Tensor dehaze(const Tensor& haze, const NoiseSource& noise) = 0;
  virtual Tensor haze_map(const Tensor& haze, const NoiseSource& noise) = 0;

  virtual ParameterList generator_parameters() = 0;
  virtual ParameterList discriminator_parameters() = 0;
  virtual std::vector<NamedSection> sections() = 0;

  // Smallest height/width the whole model (including discriminators) accepts.
  virtual int min_input_size() const = 0;

  SsimOptions& ssim_options() { return ssim_; }

 protected:
  SsimOptions ssim_;
};

class SingleScaleCgan : public CganModel {
 public:
  SingleScaleCgan(GeneratorSpec g, DiscriminatorSpec d);

  std::string kind() const override { return "single"; }
  void initialize(std::uint64_t seed) override;
  void generate(const Tensor& haze, const NoiseSource& noise) override;
  double discriminator_backward(const Tensor& haze, const Tensor& clear) override;
  LossBreakdown generator_backward(const Tensor& haze, const Tensor& clear,
                                   const LossWeights& weights) override;
  Tensor dehaze(const Tensor& haze, const NoiseSource& noise) override;
  Tensor haze_map(const Tensor& haze, const NoiseSource& noise) override;
  ParameterList generator_parameters() override { return generator_.parameters(); }
  ParameterList discriminator_parameters() override {
    return discriminator_.parameters();
  }
  std::vector<NamedSection> sections() override;
  int min_input_size() const override;

  Generator& generator() { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  const GeneratorOutput& last_output() const { return output_; }

 private:
  Generator generator_;
  Discriminator discriminator_;
  GeneratorOutput output_;
};

// Mixes a base seed with a stream index (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dehaze

#endif  // DEHAZE_MODEL_H_
