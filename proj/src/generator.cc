#include "dehaze/generator.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dehaze {
namespace {

int ceil_div_pow2(int n, int level) {
  const long long d = 1LL << level;
  return static_cast<int>((n + d - 1) / d);
}

}  // namespace

GeneratorSpec GeneratorSpec::canonical(int depth, bool star, int width_divisor) {
  if (depth < 1 || width_divisor < 1) {
    throw std::invalid_argument("canonical generator needs depth >= 1 and divisor >= 1");
  }
  GeneratorSpec spec;
  spec.depth = depth;
  spec.star = star;
  spec.encoder_channels.clear();
  for (int j = 1; j <= depth + 1; ++j) {
    const int width = std::min(512, 64 << std::min(j - 1, 4));
    spec.encoder_channels.push_back(std::max(1, width / width_divisor));
  }
  spec.dropout_sites.clear();
  for (int j = std::max(2, depth - 1); j <= depth + 1; ++j) spec.dropout_sites.push_back(j);
  return spec;
}

void GeneratorSpec::validate() const {
  if (depth < 1) throw std::invalid_argument("generator depth must be >= 1");
  if (static_cast<int>(encoder_channels.size()) != depth + 1) {
    throw std::invalid_argument(
        "generator with " + std::to_string(depth) + " units needs " +
        std::to_string(depth + 1) + " encoder widths, got " +
        std::to_string(encoder_channels.size()));
  }
  for (int c : encoder_channels) {
    if (c < 1) throw std::invalid_argument("encoder widths must be >= 1");
  }
  for (int site : dropout_sites) {
    if (site < 2 || site > depth + 1) {
      throw std::invalid_argument("dropout site conv" + std::to_string(site) +
                                  " has no mirrored unit deconvolution");
    }
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  }
  if (!(leak >= 0.0)) throw std::invalid_argument("leak must be >= 0");
}

bool GeneratorSpec::has_dropout(int conv_index) const {
  return std::find(dropout_sites.begin(), dropout_sites.end(), conv_index) !=
         dropout_sites.end();
}

LayerShape layer_size(int input_h, int input_w, int level) {
  if (input_h < 1 || input_w < 1 || level < 0) {
    throw std::invalid_argument("layer_size: dims must be >= 1 and level >= 0");
  }
  return {level, ceil_div_pow2(input_h, level), ceil_div_pow2(input_w, level), 0};
}

Generator::Generator(GeneratorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int k = spec_.depth;
  const auto& c = spec_.encoder_channels;
  tap_ = Conv2d("g.tap", 3, 3, 3, 1, true);
  int in = 3;
  for (int j = 1; j <= k + 1; ++j) {
    encoder_.emplace_back("g.conv" + std::to_string(j), in, c[j - 1], 5, 2, spec_.leak);
    in = c[j - 1];
  }
  up_.resize(k);
  for (int i = 1; i <= k; ++i) {
    const std::string name = "g.unit" + std::to_string(i);
    UpBlock& u = up_[i - 1];
    u.deconv = ConvTranspose2d(name + ".deconv", c[i], c[i - 1], 5, 2, false);
    u.norm = FeatureNorm(name + ".deconv_norm", c[i - 1]);
    u.act = LeakyRelu(spec_.leak);
    u.dropout = Dropout(spec_.dropout_rate);
    u.use_dropout = spec_.has_dropout(i + 1);
    reduce_.emplace_back(name + ".reduce", 2 * c[i - 1], c[i - 1], 3, 1, spec_.leak);
  }
  output_ = ConvTranspose2d("g.out", c[0], 3, 5, 2, true);
}

void Generator::initialize(std::uint64_t seed, double stddev) {
  std::mt19937_64 rng(seed);
  tap_.init_normal(rng, stddev);
  for (auto& e : encoder_) e.conv.init_normal(rng, stddev);
  for (int i = 0; i < spec_.depth; ++i) {
    up_[i].deconv.init_normal(rng, stddev);
    reduce_[i].conv.init_normal(rng, stddev);
  }
  output_.init_normal(rng, stddev);
}

bool Generator::subtracts(int level) const {
  if (!subtraction_enabled_) return false;
  return !(spec_.star && level == 1);
}

GeneratorOutput Generator::forward(const Tensor& haze, const NoiseSource& noise) {
  require_image(haze, "generator input");
  require_finite(haze, "generator input");
  const int k = spec_.depth;
  std::mt19937_64 rng(noise.seed);
  input_ = haze;

  GeneratorOutput out;
  out.i_r = tap_.forward(haze);

  enc_out_.assign(k + 1, Tensor());
  const Tensor* x = &haze;
  for (int j = 1; j <= k + 1; ++j) {
    enc_out_[j - 1] = encoder_[j - 1].forward(*x);
    x = &enc_out_[j - 1];
  }

  up_out_.assign(k, Tensor());
  dec_out_.assign(k, Tensor());
  const Tensor* below = &enc_out_[k];
  for (int i = k; i >= 1; --i) {
    UpBlock& u = up_[i - 1];
    const Tensor& mate = enc_out_[i - 1];
    Tensor up = u.act.forward(
        u.norm.forward(u.deconv.forward(*below, mate.height(), mate.width())));
    if (u.use_dropout) up = u.dropout.forward(up, rng);
    up_out_[i - 1] = up;
    Tensor r = reduce_[i - 1].forward(concat_channels(up, mate));
    dec_out_[i - 1] = subtracts(i) ? mate - r : std::move(r);
    below = &dec_out_[i - 1];
  }

  out.j_g = output_.forward(dec_out_[0], haze.height(), haze.width());
  out.dehazed = Tensor(out.j_g.shape());
  for (std::size_t n = 0; n < out.j_g.size(); ++n) out.dehazed[n] = std::tanh(out.j_g[n]);
  out.m = out.i_r - out.j_g;
  dehazed_ = out.dehazed;
  return out;
}

void Generator::backward(const Tensor& d_dehazed, const Tensor& d_i_r,
                         const Tensor& d_j_g) {
  require_same_shape(d_dehazed, dehazed_, "generator backward (dehazed)");
  require_same_shape(d_i_r, dehazed_, "generator backward (i_r)");
  require_same_shape(d_j_g, dehazed_, "generator backward (j_g)");
  const int k = spec_.depth;

  tap_.backward(d_i_r);

  Tensor g_jg = d_j_g;
  for (std::size_t n = 0; n < g_jg.size(); ++n) {
    g_jg[n] += d_dehazed[n] * (1.0 - dehazed_[n] * dehazed_[n]);
  }
  Tensor g_dec = output_.backward(g_jg);

  std::vector<Tensor> g_enc(k + 1);
  for (int j = 0; j <= k; ++j) g_enc[j] = Tensor(enc_out_[j].shape());

  for (int i = 1; i <= k; ++i) {
    const int ci = spec_.encoder_channels[i - 1];
    Tensor g_r = g_dec;
    if (subtracts(i)) {
      g_enc[i - 1] += g_dec;
      g_r *= -1.0;
    }
    Tensor g_cat = reduce_[i - 1].backward(g_r);
    g_enc[i - 1] += slice_channels(g_cat, ci, ci);
    Tensor g_up = slice_channels(g_cat, 0, ci);
    UpBlock& u = up_[i - 1];
    if (u.use_dropout) g_up = u.dropout.backward(g_up);
    Tensor g_below = u.deconv.backward(u.norm.backward(u.act.backward(g_up)));
    if (i == k) {
      g_enc[k] += g_below;
    } else {
      g_dec = std::move(g_below);
    }
  }

  for (int j = k + 1; j >= 1; --j) {
    Tensor g_in = encoder_[j - 1].backward(g_enc[j - 1]);
    if (j >= 2) g_enc[j - 2] += g_in;
  }
}

ParameterList Generator::parameters() {
  ParameterList list;
  tap_.collect(list);
  for (auto& e : encoder_) e.collect(list);
  for (int i = 0; i < spec_.depth; ++i) {
    up_[i].deconv.collect(list);
    up_[i].norm.collect(list);
    reduce_[i].collect(list);
  }
  output_.collect(list);
  return list;
}

std::vector<LayerShape> Generator::level_shapes(int h, int w) const {
  std::vector<LayerShape> shapes;
  for (int level = 0; level <= spec_.depth + 1; ++level) {
    LayerShape s = layer_size(h, w, level);
    s.channels = level == 0 ? 3 : spec_.encoder_channels[level - 1];
    shapes.push_back(s);
  }
  return shapes;
}

const Tensor& Generator::encoder_output(int level) const {
  return enc_out_.at(level - 1);
}

const Tensor& Generator::upsampled(int level) const { return up_out_.at(level - 1); }

const Tensor& Generator::unit_output(int level) const { return dec_out_.at(level - 1); }

ConvBlock& Generator::reduce_block(int level) { return reduce_.at(level - 1); }

}  // namespace dehaze
