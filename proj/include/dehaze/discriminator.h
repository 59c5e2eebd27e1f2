#ifndef DEHAZE_DISCRIMINATOR_H_
#define DEHAZE_DISCRIMINATOR_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "dehaze/layers.h"
#include "dehaze/tensor.h"

namespace dehaze {

// Half-open [begin, end) range of grid cell `index` when `size` pixels are
// split into `cells` bins: begin = floor(index * size / cells),
// end = ceil((index + 1) * size / cells).
std::pair<int, int> spp_cell(int index, int cells, int size);

struct SppResult {
  std::vector<double> values;        // level-major, then channel, then cell
  std::vector<std::size_t> argmax;   // flat input index of each maximum
  Shape input_shape;
};

// Spatial pyramid max pooling with grids 1x1 .. levels x levels. The output
// length is channels * sum(n^2), independent of the spatial size.
SppResult spp_pool(const Tensor& features, int levels);
Tensor spp_backward(const SppResult& pooled, const std::vector<double>& grad);
int spp_length(int channels, int levels);

struct DiscriminatorSpec {
  std::array<int, 4> conv_channels{64, 128, 256, 512};
  int spp_levels = 4;
  double leak = 0.2;

  static DiscriminatorSpec canonical(int width_divisor = 1);
  void validate() const;
  int head_width() const { return spp_length(conv_channels[3], spp_levels); }
  // Smallest square input whose last feature map still covers every grid cell.
  int min_input_size() const;
};

// Conditional discriminator: three 5x5 stride-2 blocks, one 5x5 stride-1
// block, spatial pyramid pooling and a linear head producing one logit for
// the (condition, candidate) pair stacked along channels.
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorSpec spec);

  const DiscriminatorSpec& spec() const { return spec_; }
  void initialize(std::uint64_t seed, double stddev = 0.02);

  double forward(const Tensor& condition, const Tensor& candidate);
  // Probability that `candidate` is the real clear image for `condition`.
  double discriminate(const Tensor& condition, const Tensor& candidate);

  struct InputGrad {
    Tensor condition;
    Tensor candidate;
  };
  // Gradient of a scalar with respect to the logit of the last forward call.
  InputGrad backward(double d_logit);

  ParameterList parameters();
  Linear& head() { return head_; }
  int last_head_width() const { return static_cast<int>(pooled_.values.size()); }

 private:
  DiscriminatorSpec spec_;
  std::array<ConvBlock, 4> blocks_;
  Linear head_;
  SppResult pooled_;
  int condition_channels_ = 0;
};

double sigmoid(double logit);

}  // namespace dehaze

#endif  // DEHAZE_DISCRIMINATOR_H_
