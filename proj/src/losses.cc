#include "dehaze/losses.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dehaze/discriminator.h"

namespace dehaze {
namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> k(window);
  const double r = (window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    k[i] = std::exp(-(i - r) * (i - r) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-mode separable filtering of one plane: (h - n + 1) x (w - n + 1).
std::vector<double> filter_valid(const double* src, int h, int w,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * src[y * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

// Adjoint of filter_valid: spreads an (oh x ow) map back onto h x w.
std::vector<double> filter_valid_adjoint(const std::vector<double>& g, int h, int w,
                                         const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double v = g[static_cast<std::size_t>(y) * ow + x];
      for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(y + i) * ow + x] += k[i] * v;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double v = rows[static_cast<std::size_t>(y) * ow + x];
      for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(y) * w + x + i] += k[i] * v;
    }
  }
  return out;
}

void check_ssim_inputs(const Tensor& a, const Tensor& b, const SsimOptions& o) {
  require_same_shape(a, b, "ssim");
  if (o.window < 1 || o.window % 2 == 0) {
    throw std::invalid_argument("ssim window must be a positive odd size");
  }
  if (a.height() < o.window || a.width() < o.window) {
    throw std::invalid_argument("ssim: image " + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + " is smaller than the " +
                                std::to_string(o.window) + "x" +
                                std::to_string(o.window) + " window");
  }
}

// Computes mean SSIM and, when `grad` is non-null, d(mean SSIM)/d(b).
double ssim_impl(const Tensor& a, const Tensor& b, const SsimOptions& o, Tensor* grad) {
  check_ssim_inputs(a, b, o);
  const auto k = gaussian_kernel(o.window, o.sigma);
  const double c1 = (0.01 * o.dynamic_range) * (0.01 * o.dynamic_range);
  const double c2 = (0.03 * o.dynamic_range) * (0.03 * o.dynamic_range);
  const int h = a.height(), w = a.width();
  const std::size_t plane = a.plane_size();
  const std::size_t positions =
      static_cast<std::size_t>(h - o.window + 1) * (w - o.window + 1);
  const double count = static_cast<double>(positions) * a.channels();
  if (grad) *grad = Tensor(a.shape());

  double total = 0.0;
  std::vector<double> aa(plane), bb(plane), ab(plane);
  for (int c = 0; c < a.channels(); ++c) {
    const double* pa = a.plane(c);
    const double* pb = b.plane(c);
    for (std::size_t i = 0; i < plane; ++i) {
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, h, w, k);
    const auto mu_b = filter_valid(pb, h, w, k);
    const auto f_aa = filter_valid(aa.data(), h, w, k);
    const auto f_bb = filter_valid(bb.data(), h, w, k);
    const auto f_ab = filter_valid(ab.data(), h, w, k);
    std::vector<double> g_mu(positions), g_bb(positions), g_ab(positions);
    for (std::size_t p = 0; p < positions; ++p) {
      const double ma = mu_a[p], mb = mu_b[p];
      const double saa = f_aa[p] - ma * ma;
      const double sbb = f_bb[p] - mb * mb;
      const double sab = f_ab[p] - ma * mb;
      const double a1 = 2.0 * ma * mb + c1;
      const double a2 = 2.0 * sab + c2;
      const double b1 = ma * ma + mb * mb + c1;
      const double b2 = saa + sbb + c2;
      const double s = a1 * a2 / (b1 * b2);
      total += s;
      if (grad) {
        const double ds_dmb = 2.0 * ma * a2 / (b1 * b2) - s * 2.0 * mb / b1;
        const double ds_dsab = 2.0 * a1 / (b1 * b2);
        const double ds_dsbb = -s / b2;
        g_mu[p] = (ds_dmb - 2.0 * mb * ds_dsbb - ma * ds_dsab) / count;
        g_bb[p] = ds_dsbb / count;
        g_ab[p] = ds_dsab / count;
      }
    }
    if (grad) {
      const auto t_mu = filter_valid_adjoint(g_mu, h, w, k);
      const auto t_bb = filter_valid_adjoint(g_bb, h, w, k);
      const auto t_ab = filter_valid_adjoint(g_ab, h, w, k);
      double* out = grad->plane(c);
      for (std::size_t i = 0; i < plane; ++i) {
        out[i] = t_mu[i] + 2.0 * pb[i] * t_bb[i] + pa[i] * t_ab[i];
      }
    }
  }
  return total / count;
}

void require_finite_part(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw std::domain_error(std::string("non-finite loss term: ") + name);
  }
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {lambda1, lambda2, lambda3, lambda4, lambda_wd}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("loss weights must be finite and >= 0");
    }
  }
  if (!(thresh > 0.0)) throw std::invalid_argument("psnr thresh must be > 0");
}

double clamped_exp(double v) {
  return std::exp(std::clamp(v, kExpClampLow, kExpClampHigh));
}

double clamped_exp_derivative(double v) {
  if (v < kExpClampLow || v > kExpClampHigh) return 0.0;
  return std::exp(v);
}

ConsistencyResult consistency_loss(const Tensor& haze, const Tensor& dehazed,
                                   const Tensor& i_r, const Tensor& j_g) {
  require_same_shape(haze, dehazed, "consistency_loss (dehazed)");
  require_same_shape(haze, i_r, "consistency_loss (i_r)");
  require_same_shape(haze, j_g, "consistency_loss (j_g)");
  ConsistencyResult r;
  r.d_dehazed = Tensor(haze.shape());
  r.d_i_r = Tensor(haze.shape());
  r.d_j_g = Tensor(haze.shape());
  const double n = static_cast<double>(haze.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < haze.size(); ++i) {
    const double res = haze[i] - clamped_exp(i_r[i]) - dehazed[i] + clamped_exp(j_g[i]);
    sum += std::abs(res);
    const double s = (res > 0.0 ? 1.0 : (res < 0.0 ? -1.0 : 0.0)) / n;
    r.d_dehazed[i] = -s;
    r.d_i_r[i] = -s * clamped_exp_derivative(i_r[i]);
    r.d_j_g[i] = s * clamped_exp_derivative(j_g[i]);
  }
  r.value = sum / n;
  return r;
}

AdversarialLosses adversarial_losses(double d_real, double d_fake) {
  const auto guard = [](double p) { return std::clamp(p, kProbEpsilon, 1.0); };
  AdversarialLosses out;
  out.d_loss = -(std::log(guard(d_real)) + std::log(guard(1.0 - d_fake)));
  out.g_loss = -std::log(guard(d_fake));
  return out;
}

double g_loss_logit_grad(double fake_logit) { return -(1.0 - sigmoid(fake_logit)); }
double d_loss_real_logit_grad(double real_logit) { return -(1.0 - sigmoid(real_logit)); }
double d_loss_fake_logit_grad(double fake_logit) { return sigmoid(fake_logit); }

ImageLoss l1_loss(const Tensor& target, const Tensor& output) {
  require_same_shape(target, output, "l1_loss");
  ImageLoss r;
  r.d_output = Tensor(output.shape());
  const double n = static_cast<double>(target.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = output[i] - target[i];
    sum += std::abs(d);
    r.d_output[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
  }
  r.value = sum / n;
  return r;
}

double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options) {
  return ssim_impl(a, b, options, nullptr);
}

ImageLoss ssim_loss(const Tensor& target, const Tensor& output, const SsimOptions& options) {
  ImageLoss r;
  Tensor g;
  r.value = 1.0 - ssim_impl(target, output, options, &g);
  r.d_output = g * -1.0;
  return r;
}

namespace {

struct PsnrTerms {
  double range;
  double mse;
  double raw_mse;
};

PsnrTerms psnr_terms(const Tensor& target, const Tensor& output) {
  require_same_shape(target, output, "psnr");
  if (target.empty()) throw std::invalid_argument("psnr of an empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = target[i] - output[i];
    sum += d * d;
  }
  const double raw = sum / static_cast<double>(target.size());
  return {std::max(target.max() - target.min(), kRangeFloor), std::max(raw, kMseFloor), raw};
}

}  // namespace

double psnr_value(const Tensor& target, const Tensor& output) {
  const PsnrTerms t = psnr_terms(target, output);
  return 10.0 * std::log10(t.range * t.range / t.mse);
}

ImageLoss psnr_loss(const Tensor& target, const Tensor& output, double thresh) {
  if (!(thresh > 0.0)) throw std::invalid_argument("psnr thresh must be > 0");
  const PsnrTerms t = psnr_terms(target, output);
  ImageLoss r;
  r.value = 1.0 - 10.0 * std::log10(t.range * t.range / t.mse) / thresh;
  r.d_output = Tensor(output.shape());
  if (t.raw_mse > kMseFloor) {
    // d(loss)/d(mse) = 10 / (ln 10 * mse * thresh)
    const double scale = 10.0 / (std::log(10.0) * t.mse * thresh) * 2.0 /
                         static_cast<double>(output.size());
    for (std::size_t i = 0; i < output.size(); ++i) {
      r.d_output[i] = scale * (output[i] - target[i]);
    }
  }
  return r;
}

LossBreakdown total_generator_loss(const LossParts& p, const LossWeights& w) {
  require_finite_part(p.consistency, "consistency");
  require_finite_part(p.adversarial_g, "adversarial_g");
  require_finite_part(p.adversarial_d, "adversarial_d");
  require_finite_part(p.l1, "l1");
  require_finite_part(p.ssim_loss, "ssim_loss");
  require_finite_part(p.psnr_loss, "psnr_loss");
  require_finite_part(p.weight_decay, "weight_decay");
  LossBreakdown b;
  b.consistency = p.consistency;
  b.adversarial_g = p.adversarial_g;
  b.adversarial_d = p.adversarial_d;
  b.l1 = p.l1;
  b.ssim_loss = p.ssim_loss;
  b.psnr_loss = p.psnr_loss;
  b.weight_decay = p.weight_decay;
  b.total = p.consistency + w.lambda1 * p.adversarial_g + w.lambda2 * p.l1 +
            w.lambda3 * p.ssim_loss + w.lambda4 * p.psnr_loss +
            w.lambda_wd * p.weight_decay;
  require_finite_part(b.total, "total");
  return b;
}

std::string first_non_finite(const LossBreakdown& b) {
  const std::pair<const char*, double> fields[] = {
      {"consistency", b.consistency}, {"adversarial_g", b.adversarial_g},
      {"adversarial_d", b.adversarial_d}, {"l1", b.l1},
      {"ssim_loss", b.ssim_loss},     {"psnr_loss", b.psnr_loss},
      {"weight_decay", b.weight_decay}, {"total", b.total}};
  for (const auto& [name, v] : fields) {
    if (!std::isfinite(v)) return name;
  }
  return {};
}

}  // namespace dehaze
