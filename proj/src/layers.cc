#include "dehaze/layers.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dehaze {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

// Upper bound on the column buffer, in elements.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

int rows_per_block(int channels, const ConvGeometry& g) {
  const std::size_t per_row =
      static_cast<std::size_t>(channels) * g.kernel * g.kernel * g.out_w;
  const std::size_t rows = std::max<std::size_t>(1, kColumnBudget / std::max<std::size_t>(per_row, 1));
  return static_cast<int>(std::min<std::size_t>(rows, g.out_h));
}

// Columns for output rows [row0, row1): (channels * k * k) x ((row1 - row0) * out_w).
void im2col(const double* src, int channels, const ConvGeometry& g, int row0,
            int row1, double* cols) {
  const int n = (row1 - row0) * g.out_w;
  const int k = g.kernel;
  for (int c = 0; c < channels; ++c) {
    const double* plane = src + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + (static_cast<std::size_t>(c * k + ky) * k + kx) * n;
        for (int oy = row0; oy < row1; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* out = row + static_cast<std::size_t>(oy - row0) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(out, out + g.out_w, 0.0);
            continue;
          }
          const double* line = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            out[ox] = (ix >= 0 && ix < g.in_w) ? line[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters columns back into the input raster.
void col2im_add(const double* cols, int channels, const ConvGeometry& g, int row0,
                int row1, double* dst) {
  const int n = (row1 - row0) * g.out_w;
  const int k = g.kernel;
  for (int c = 0; c < channels; ++c) {
    double* plane = dst + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + (static_cast<std::size_t>(c * k + ky) * k + kx) * n;
        for (int oy = row0; oy < row1; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          const double* in = row + static_cast<std::size_t>(oy - row0) * g.out_w;
          double* line = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) line[ix] += in[ox];
          }
        }
      }
    }
  }
}

void fill_normal(std::vector<double>& v, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : v) x = dist(rng);
}

}  // namespace

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

double squared_weight_norm(const ParameterList& params) {
  double sum = 0.0;
  for (const Parameter* p : params) {
    if (!p->decay) continue;
    for (double v : p->value) sum += v * v;
  }
  return sum;
}

void add_weight_decay_grad(const ParameterList& params, double scale) {
  if (scale == 0.0) return;
  for (Parameter* p : params) {
    if (!p->decay) continue;
    for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += 2.0 * scale * p->value[i];
  }
}

int conv_output_size(int n, int kernel, int stride) {
  return (n + 2 * (kernel / 2) - kernel) / stride + 1;
}

ConvGeometry ConvGeometry::forward(int in_h, int in_w, int kernel, int stride) {
  ConvGeometry g;
  g.in_h = in_h;
  g.in_w = in_w;
  g.kernel = kernel;
  g.stride = stride;
  g.pad = kernel / 2;
  g.out_h = conv_output_size(in_h, kernel, stride);
  g.out_w = conv_output_size(in_w, kernel, stride);
  return g;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel,
               int stride, bool bias)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      has_bias_(bias),
      weight_(name + ".weight",
              static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel,
              true),
      bias_(name + ".bias", bias ? out_channels : 0, false) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1) {
    throw std::invalid_argument("Conv2d " + name + ": invalid configuration");
  }
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.channels() != in_) {
    throw std::invalid_argument("Conv2d " + weight_.name + ": expected " +
                                std::to_string(in_) + " input channels, got " +
                                std::to_string(x.channels()));
  }
  input_ = x;
  geom_ = ConvGeometry::forward(x.height(), x.width(), kernel_, stride_);
  const ConvGeometry& g = geom_;
  const int kdim = in_ * kernel_ * kernel_;
  Tensor y(out_, g.out_h, g.out_w);
  ConstMatrixMap w(weight_.value.data(), out_, kdim);
  const int block = rows_per_block(in_, g);
  std::vector<double> cols(static_cast<std::size_t>(kdim) * block * g.out_w);
  for (int r0 = 0; r0 < g.out_h; r0 += block) {
    const int r1 = std::min(g.out_h, r0 + block);
    const int n = (r1 - r0) * g.out_w;
    im2col(x.data(), in_, g, r0, r1, cols.data());
    ConstMatrixMap c(cols.data(), kdim, n);
    StridedMap yb(y.data() + static_cast<std::size_t>(r0) * g.out_w, out_, n,
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(y.plane_size())));
    yb.noalias() = w * c;
  }
  if (has_bias_) {
    for (int o = 0; o < out_; ++o) {
      double* p = y.plane(o);
      for (std::size_t i = 0; i < y.plane_size(); ++i) p[i] += bias_.value[o];
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const ConvGeometry& g = geom_;
  if (grad_out.shape() != Shape{out_, g.out_h, g.out_w}) {
    throw std::invalid_argument("Conv2d::backward: gradient shape mismatch");
  }
  const int kdim = in_ * kernel_ * kernel_;
  Tensor grad_in(input_.shape());
  ConstMatrixMap w(weight_.value.data(), out_, kdim);
  MatrixMap dw(weight_.grad.data(), out_, kdim);
  const int block = rows_per_block(in_, g);
  std::vector<double> cols(static_cast<std::size_t>(kdim) * block * g.out_w);
  std::vector<double> dcols(cols.size());
  for (int r0 = 0; r0 < g.out_h; r0 += block) {
    const int r1 = std::min(g.out_h, r0 + block);
    const int n = (r1 - r0) * g.out_w;
    im2col(input_.data(), in_, g, r0, r1, cols.data());
    ConstMatrixMap c(cols.data(), kdim, n);
    ConstStridedMap dy(grad_out.data() + static_cast<std::size_t>(r0) * g.out_w, out_, n,
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(grad_out.plane_size())));
    dw.noalias() += dy * c.transpose();
    MatrixMap dc(dcols.data(), kdim, n);
    dc.noalias() = w.transpose() * dy;
    col2im_add(dcols.data(), in_, g, r0, r1, grad_in.data());
  }
  if (has_bias_) {
    for (int o = 0; o < out_; ++o) {
      const double* p = grad_out.plane(o);
      double s = 0.0;
      for (std::size_t i = 0; i < grad_out.plane_size(); ++i) s += p[i];
      bias_.grad[o] += s;
    }
  }
  return grad_in;
}

void Conv2d::init_normal(std::mt19937_64& rng, double stddev) {
  fill_normal(weight_.value, rng, stddev);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

void Conv2d::collect(ParameterList& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(std::string name, int in_channels,
                                 int out_channels, int kernel, int stride, bool bias)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      has_bias_(bias),
      weight_(name + ".weight",
              static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel,
              true),
      bias_(name + ".bias", bias ? out_channels : 0, false) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1) {
    throw std::invalid_argument("ConvTranspose2d " + name + ": invalid configuration");
  }
}

Tensor ConvTranspose2d::forward(const Tensor& x, int out_h, int out_w) {
  if (x.channels() != in_) {
    throw std::invalid_argument("ConvTranspose2d " + weight_.name + ": expected " +
                                std::to_string(in_) + " input channels, got " +
                                std::to_string(x.channels()));
  }
  geom_ = ConvGeometry::forward(out_h, out_w, kernel_, stride_);
  if (geom_.out_h != x.height() || geom_.out_w != x.width()) {
    throw std::invalid_argument(
        "ConvTranspose2d " + weight_.name + ": target " + std::to_string(out_h) +
        "x" + std::to_string(out_w) + " is not reachable from input " +
        std::to_string(x.height()) + "x" + std::to_string(x.width()));
  }
  input_ = x;
  const ConvGeometry& g = geom_;
  const int kdim = out_ * kernel_ * kernel_;
  Tensor y(out_, out_h, out_w);
  ConstMatrixMap w(weight_.value.data(), in_, kdim);
  const int block = rows_per_block(out_, g);
  std::vector<double> cols(static_cast<std::size_t>(kdim) * block * g.out_w);
  for (int r0 = 0; r0 < g.out_h; r0 += block) {
    const int r1 = std::min(g.out_h, r0 + block);
    const int n = (r1 - r0) * g.out_w;
    ConstStridedMap xb(x.data() + static_cast<std::size_t>(r0) * g.out_w, in_, n,
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(x.plane_size())));
    MatrixMap c(cols.data(), kdim, n);
    c.noalias() = w.transpose() * xb;
    col2im_add(cols.data(), out_, g, r0, r1, y.data());
  }
  if (has_bias_) {
    for (int o = 0; o < out_; ++o) {
      double* p = y.plane(o);
      for (std::size_t i = 0; i < y.plane_size(); ++i) p[i] += bias_.value[o];
    }
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
  const ConvGeometry& g = geom_;
  if (grad_out.shape() != Shape{out_, g.in_h, g.in_w}) {
    throw std::invalid_argument("ConvTranspose2d::backward: gradient shape mismatch");
  }
  const int kdim = out_ * kernel_ * kernel_;
  Tensor grad_in(input_.shape());
  ConstMatrixMap w(weight_.value.data(), in_, kdim);
  MatrixMap dw(weight_.grad.data(), in_, kdim);
  const int block = rows_per_block(out_, g);
  std::vector<double> dcols(static_cast<std::size_t>(kdim) * block * g.out_w);
  for (int r0 = 0; r0 < g.out_h; r0 += block) {
    const int r1 = std::min(g.out_h, r0 + block);
    const int n = (r1 - r0) * g.out_w;
    im2col(grad_out.data(), out_, g, r0, r1, dcols.data());
    ConstMatrixMap dc(dcols.data(), kdim, n);
    ConstStridedMap xb(input_.data() + static_cast<std::size_t>(r0) * g.out_w, in_, n,
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(input_.plane_size())));
    dw.noalias() += xb * dc.transpose();
    StridedMap dx(grad_in.data() + static_cast<std::size_t>(r0) * g.out_w, in_, n,
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(grad_in.plane_size())));
    dx.noalias() = w * dc;
  }
  if (has_bias_) {
    for (int o = 0; o < out_; ++o) {
      const double* p = grad_out.plane(o);
      double s = 0.0;
      for (std::size_t i = 0; i < grad_out.plane_size(); ++i) s += p[i];
      bias_.grad[o] += s;
    }
  }
  return grad_in;
}

void ConvTranspose2d::init_normal(std::mt19937_64& rng, double stddev) {
  fill_normal(weight_.value, rng, stddev);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

void ConvTranspose2d::collect(ParameterList& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// FeatureNorm

FeatureNorm::FeatureNorm(std::string name, int channels)
    : channels_(channels),
      gamma_(name + ".gamma", channels, false),
      beta_(name + ".beta", channels, false) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0);
}

Tensor FeatureNorm::forward(const Tensor& x) {
  if (x.channels() != channels_) {
    throw std::invalid_argument("FeatureNorm " + gamma_.name + ": channel mismatch");
  }
  const std::size_t n = x.plane_size();
  normalized_ = Tensor(x.shape());
  inv_std_.assign(channels_, 0.0);
  Tensor y(x.shape());
  // A single position has zero variance and would normalize to a constant;
  // such maps only get the affine part.
  passthrough_ = n == 1;
  for (int c = 0; c < channels_; ++c) {
    const double* src = x.plane(c);
    if (passthrough_) {
      inv_std_[c] = 1.0;
      normalized_.plane(c)[0] = src[0];
      y.plane(c)[0] = gamma_.value[c] * src[0] + beta_.value[c];
      continue;
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += src[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + kEpsilon);
    inv_std_[c] = inv;
    double* xh = normalized_.plane(c);
    double* dst = y.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      xh[i] = (src[i] - mean) * inv;
      dst[i] = gamma_.value[c] * xh[i] + beta_.value[c];
    }
  }
  return y;
}

Tensor FeatureNorm::backward(const Tensor& grad_out) {
  require_same_shape(grad_out, normalized_, "FeatureNorm::backward");
  const std::size_t n = grad_out.plane_size();
  Tensor grad_in(grad_out.shape());
  for (int c = 0; c < channels_; ++c) {
    const double* dy = grad_out.plane(c);
    const double* xh = normalized_.plane(c);
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_dy += dy[i];
      sum_dy_xh += dy[i] * xh[i];
    }
    gamma_.grad[c] += sum_dy_xh;
    beta_.grad[c] += sum_dy;
    if (passthrough_) {
      grad_in.plane(c)[0] = gamma_.value[c] * dy[0];
      continue;
    }
    const double mean_dy = sum_dy / static_cast<double>(n);
    const double mean_dy_xh = sum_dy_xh / static_cast<double>(n);
    const double scale = gamma_.value[c] * inv_std_[c];
    double* dx = grad_in.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      dx[i] = scale * (dy[i] - mean_dy - xh[i] * mean_dy_xh);
    }
  }
  return grad_in;
}

void FeatureNorm::collect(ParameterList& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

// ---------------------------------------------------------------------------
// Activations, dropout

Tensor LeakyRelu::forward(const Tensor& x) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : slope_ * x[i];
  return y;
}

Tensor LeakyRelu::backward(const Tensor& grad_out) const {
  require_same_shape(grad_out, input_, "LeakyRelu::backward");
  Tensor g(grad_out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = input_[i] > 0.0 ? grad_out[i] : slope_ * grad_out[i];
  }
  return g;
}

Tensor Dropout::forward(const Tensor& x, std::mt19937_64& rng) {
  const double keep_scale = 1.0 / (1.0 - rate_);
  std::bernoulli_distribution drop(rate_);
  mask_.resize(x.size());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = drop(rng) ? 0.0 : keep_scale;
    y[i] = x[i] * mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out) const {
  if (grad_out.size() != mask_.size()) {
    throw std::invalid_argument("Dropout::backward: gradient size mismatch");
  }
  Tensor g(grad_out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * mask_[i];
  return g;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::string name, int in_features, int out_features)
    : in_(in_features),
      out_(out_features),
      weight_(name + ".weight", static_cast<std::size_t>(in_features) * out_features, true),
      bias_(name + ".bias", out_features, false) {}

std::vector<double> Linear::forward(const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != in_) {
    throw std::invalid_argument("Linear " + weight_.name + ": expected " +
                                std::to_string(in_) + " features, got " +
                                std::to_string(x.size()));
  }
  input_ = x;
  std::vector<double> y(out_);
  for (int o = 0; o < out_; ++o) {
    const double* w = weight_.value.data() + static_cast<std::size_t>(o) * in_;
    double s = bias_.value[o];
    for (int i = 0; i < in_; ++i) s += w[i] * x[i];
    y[o] = s;
  }
  return y;
}

std::vector<double> Linear::backward(const std::vector<double>& grad_out) {
  std::vector<double> dx(in_, 0.0);
  for (int o = 0; o < out_; ++o) {
    const double g = grad_out[o];
    const double* w = weight_.value.data() + static_cast<std::size_t>(o) * in_;
    double* dw = weight_.grad.data() + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) {
      dw[i] += g * input_[i];
      dx[i] += g * w[i];
    }
    bias_.grad[o] += g;
  }
  return dx;
}

void Linear::init_normal(std::mt19937_64& rng, double stddev) {
  fill_normal(weight_.value, rng, stddev);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

void Linear::collect(ParameterList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// ConvBlock

ConvBlock::ConvBlock(const std::string& name, int in, int out, int kernel,
                     int stride, double leak)
    : conv(name + ".conv", in, out, kernel, stride, false),
      norm(name + ".norm", out),
      act(leak) {}

Tensor ConvBlock::forward(const Tensor& x) {
  return act.forward(norm.forward(conv.forward(x)));
}

Tensor ConvBlock::backward(const Tensor& grad_out) {
  return conv.backward(norm.backward(act.backward(grad_out)));
}

void ConvBlock::collect(ParameterList& out) {
  conv.collect(out);
  norm.collect(out);
}

}  // namespace dehaze
