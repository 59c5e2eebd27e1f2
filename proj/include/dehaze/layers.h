#ifndef DEHAZE_LAYERS_H_
#define DEHAZE_LAYERS_H_

// Trainable building blocks with explicit forward/backward passes. Each layer
// caches what its backward pass needs from the most recent forward call, so a
// layer instance serves one forward/backward pair at a time.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dehaze/tensor.h"

namespace dehaze {

struct Parameter {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;
  bool decay = false;  // counted in the weight-decay norm

  Parameter() = default;
  Parameter(std::string n, std::size_t count, bool decayed)
      : name(std::move(n)), value(count, 0.0), grad(count, 0.0), decay(decayed) {}

  std::size_t size() const { return value.size(); }
  void zero_grad();
};

using ParameterList = std::vector<Parameter*>;

void zero_grads(const ParameterList& params);
// Sum of squared values over the parameters flagged for weight decay.
double squared_weight_norm(const ParameterList& params);
// Adds 2 * scale * w to the gradient of every decayed parameter.
void add_weight_decay_grad(const ParameterList& params, double scale);

// Spatial bookkeeping of a strided, zero-padded 2-D convolution.
struct ConvGeometry {
  int in_h = 0, in_w = 0;
  int out_h = 0, out_w = 0;
  int kernel = 1, stride = 1, pad = 0;

  static ConvGeometry forward(int in_h, int in_w, int kernel, int stride);
};

// Output size of a kernel/stride convolution padded by kernel / 2. For odd
// kernels and stride 2 this is ceil(n / 2).
int conv_output_size(int n, int kernel, int stride);

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel,
         int stride, bool bias);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

  void init_normal(std::mt19937_64& rng, double stddev);
  void collect(ParameterList& out);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  bool has_bias() const { return has_bias_; }

 private:
  int in_ = 0, out_ = 0, kernel_ = 1, stride_ = 1;
  bool has_bias_ = false;
  Parameter weight_;  // out x (in * k * k)
  Parameter bias_;
  Tensor input_;
  ConvGeometry geom_;
};

// Transposed convolution whose output is forced to an explicit (h, w). The
// target must be a size the matching forward convolution maps onto the input
// size; the full transposed result is cropped to it.
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(std::string name, int in_channels, int out_channels,
                  int kernel, int stride, bool bias);

  Tensor forward(const Tensor& x, int out_h, int out_w);
  Tensor backward(const Tensor& grad_out);

  void init_normal(std::mt19937_64& rng, double stddev);
  void collect(ParameterList& out);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  int in_ = 0, out_ = 0, kernel_ = 1, stride_ = 1;
  bool has_bias_ = false;
  Parameter weight_;  // in x (out * k * k)
  Parameter bias_;
  Tensor input_;
  ConvGeometry geom_;  // geometry of the adjoint (forward) convolution
};

// Per-channel normalization over the spatial extent with learned scale and
// shift. With a batch of one this is what batch normalization reduces to.
class FeatureNorm {
 public:
  static constexpr double kEpsilon = 1e-5;

  FeatureNorm() = default;
  FeatureNorm(std::string name, int channels);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(ParameterList& out);

 private:
  int channels_ = 0;
  Parameter gamma_;
  Parameter beta_;
  Tensor normalized_;
  std::vector<double> inv_std_;
  bool passthrough_ = false;
};

class LeakyRelu {
 public:
  explicit LeakyRelu(double slope = 0.2) : slope_(slope) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  double slope_;
  Tensor input_;
};

// Inverted dropout: kept units are scaled by 1 / (1 - rate). Active in every
// phase; the mask comes from the caller's generator.
class Dropout {
 public:
  explicit Dropout(double rate = 0.5) : rate_(rate) {}
  Tensor forward(const Tensor& x, std::mt19937_64& rng);
  Tensor backward(const Tensor& grad_out) const;

 private:
  double rate_;
  std::vector<double> mask_;
};

class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in_features, int out_features);

  std::vector<double> forward(const std::vector<double>& x);
  std::vector<double> backward(const std::vector<double>& grad_out);

  void init_normal(std::mt19937_64& rng, double stddev);
  void collect(ParameterList& out);

  int in_features() const { return in_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  int in_ = 0, out_ = 0;
  Parameter weight_;  // out x in
  Parameter bias_;
  std::vector<double> input_;
};

// conv/deconv -> norm -> leaky relu, the repeated unit of both networks.
struct ConvBlock {
  Conv2d conv;
  FeatureNorm norm;
  LeakyRelu act;

  ConvBlock() = default;
  ConvBlock(const std::string& name, int in, int out, int kernel, int stride,
            double leak);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(ParameterList& out);
};

}  // namespace dehaze

#endif  // DEHAZE_LAYERS_H_
