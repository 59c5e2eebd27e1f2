#include "support.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "dehaze/evaluation.h"
#include "dehaze/haze_model.h"
#include "dehaze/image_io.h"

namespace testing_support {

Tensor random_tensor(std::mt19937_64& rng, int c, int h, int w, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(c, h, w);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Tensor random_bytes(std::mt19937_64& rng, int c, int h, int w) {
  std::uniform_int_distribution<int> u(0, 255);
  Tensor t(c, h, w);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Tensor synthetic_scene(std::uint64_t seed, int h, int w) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t(3, h, w);
  double base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.2 + 0.5 * u(rng);
    gx[c] = 0.4 * (u(rng) - 0.5);
    gy[c] = 0.4 * (u(rng) - 0.5);
  }
  const double fx = 2.0 + 6.0 * u(rng), fy = 2.0 + 6.0 * u(rng), ph = 6.28 * u(rng);
  struct Blob {
    double cx, cy, r, col[3];
  };
  std::vector<Blob> blobs(4);
  for (auto& b : blobs) {
    b.cx = u(rng);
    b.cy = u(rng);
    b.r = 0.08 + 0.2 * u(rng);
    for (double& c : b.col) c = u(rng);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = (x + 0.5) / w, sy = (y + 0.5) / h;
      for (int c = 0; c < 3; ++c) {
        double v = base[c] + gx[c] * (sx - 0.5) + gy[c] * (sy - 0.5) +
                   0.12 * std::sin(fx * sx * 3.1416 + ph + c) * std::cos(fy * sy * 3.1416);
        for (const auto& b : blobs) {
          const double d2 = (sx - b.cx) * (sx - b.cx) + (sy - b.cy) * (sy - b.cy);
          const double a = 1.0 / (1.0 + std::exp((std::sqrt(d2) - b.r) * 40.0));
          v = v * (1.0 - a) + b.col[c] * a;
        }
        t.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return t;
}

namespace {

dehaze::TrainingPair make_pair(std::uint64_t seed, int h, int w, std::mt19937_64& rng,
                               const std::string& id) {
  const Tensor clear = synthetic_scene(seed, h, w);
  dehaze::SynthesisOptions opts;
  const auto params = dehaze::sample_scattering(rng, opts);
  const auto pair = dehaze::synthesize_pair(clear, params, std::nullopt, opts);
  auto quantize = [](const Tensor& unit01) {
    Tensor bytes(unit01.shape());
    for (std::size_t i = 0; i < unit01.size(); ++i) {
      bytes[i] = std::round(std::clamp(unit01[i], 0.0, 1.0) * 255.0);
    }
    return dehaze::to_unit_signed(bytes);
  };
  return {id, quantize(pair.haze), quantize(pair.clear)};
}

}  // namespace

std::vector<dehaze::TrainingPair> synthetic_pairs(int n, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<dehaze::TrainingPair> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(make_pair(seed * 1000 + i, h, w, rng, "p" + std::to_string(i)));
  }
  return out;
}

std::vector<dehaze::TrainingPair> synthetic_pairs_mixed(int n, int min_side, int max_side,
                                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> side(min_side, max_side);
  std::vector<dehaze::TrainingPair> out;
  for (int i = 0; i < n; ++i) {
    const int h = side(rng), w = side(rng);
    out.push_back(make_pair(seed * 1000 + i, h, w, rng, "m" + std::to_string(i)));
  }
  return out;
}

double mean_psnr_eval(dehaze::CganModel* model, const std::vector<dehaze::TrainingPair>& pairs,
                      std::uint64_t noise_seed) {
  double sum = 0.0;
  for (const auto& p : pairs) {
    const Tensor out = model ? model->dehaze(p.haze, dehaze::NoiseSource{noise_seed}) : p.haze;
    sum += dehaze::psnr_eval(dehaze::to_byte_scale(p.clear), dehaze::to_byte_scale(out));
  }
  return sum / static_cast<double>(pairs.size());
}

double ref_l1(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) s += std::fabs(a.at(c, y, x) - b.at(c, y, x));
  return s / static_cast<double>(a.size());
}

double ref_consistency(const Tensor& haze, const Tensor& out, const Tensor& i_r,
                       const Tensor& j_g) {
  double s = 0.0;
  for (int c = 0; c < haze.channels(); ++c)
    for (int y = 0; y < haze.height(); ++y)
      for (int x = 0; x < haze.width(); ++x) {
        s += std::fabs(haze.at(c, y, x) - std::exp(i_r.at(c, y, x)) - out.at(c, y, x) +
                       std::exp(j_g.at(c, y, x)));
      }
  return s / static_cast<double>(haze.size());
}

double ref_ssim(const Tensor& a, const Tensor& b, int window, double sigma, double range) {
  std::vector<double> w(window * window);
  double wsum = 0.0;
  const int half = window / 2;
  for (int i = 0; i < window; ++i)
    for (int j = 0; j < window; ++j) {
      const double d2 = (i - half) * (i - half) + (j - half) * (j - half);
      w[i * window + j] = std::exp(-d2 / (2.0 * sigma * sigma));
      wsum += w[i * window + j];
    }
  for (double& v : w) v /= wsum;
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  double total = 0.0;
  long count = 0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 0; y + window <= a.height(); ++y)
      for (int x = 0; x + window <= a.width(); ++x) {
        double ma = 0, mb = 0;
        for (int i = 0; i < window; ++i)
          for (int j = 0; j < window; ++j) {
            ma += w[i * window + j] * a.at(c, y + i, x + j);
            mb += w[i * window + j] * b.at(c, y + i, x + j);
          }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < window; ++i)
          for (int j = 0; j < window; ++j) {
            const double da = a.at(c, y + i, x + j) - ma, db = b.at(c, y + i, x + j) - mb;
            va += w[i * window + j] * da * da;
            vb += w[i * window + j] * db * db;
            cov += w[i * window + j] * da * db;
          }
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / static_cast<double>(count);
}

double ref_psnr_loss(const Tensor& target, const Tensor& output, double thresh) {
  double lo = target[0], hi = target[0];
  for (std::size_t i = 0; i < target.size(); ++i) {
    lo = std::min(lo, target[i]);
    hi = std::max(hi, target[i]);
  }
  const double range = std::max(hi - lo, 1e-6);
  const double m = std::max(ref_mse(target, output), 1e-10);
  return 1.0 - 10.0 * std::log10(range * range / m) / thresh;
}

double ref_mse(const Tensor& a, const Tensor& b) {
  long double s = 0.0L;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const long double d = static_cast<long double>(a.at(c, y, x)) - b.at(c, y, x);
        s += d * d;
      }
  return static_cast<double>(s / a.size());
}

double ref_nrmse(const Tensor& a, const Tensor& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * a[i];
  return std::sqrt(ref_mse(a, b)) / std::sqrt(static_cast<double>(s / a.size()));
}

double ref_psnr_eval(const Tensor& a, const Tensor& b) {
  return 20.0 * std::log10(255.0) - 10.0 * std::log10(ref_mse(a, b));
}

std::vector<double> ref_spp(const Tensor& x, int levels) {
  std::vector<double> out;
  for (int n = 1; n <= levels; ++n)
    for (int c = 0; c < x.channels(); ++c)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const int y0 = static_cast<int>(std::floor(static_cast<double>(i) * x.height() / n));
          const int y1 = static_cast<int>(std::ceil(static_cast<double>(i + 1) * x.height() / n));
          const int x0 = static_cast<int>(std::floor(static_cast<double>(j) * x.width() / n));
          const int x1 = static_cast<int>(std::ceil(static_cast<double>(j + 1) * x.width() / n));
          double m = -std::numeric_limits<double>::infinity();
          for (int y = y0; y < y1; ++y)
            for (int xx = x0; xx < x1; ++xx) m = std::max(m, x.at(c, y, xx));
          out.push_back(m);
        }
  return out;
}

Tensor ref_conv(const Tensor& x, const std::vector<double>& weight, const std::vector<double>& bias,
                int out_c, int k, int stride) {
  const int pad = k / 2;
  const int oh = (x.height() + 2 * pad - k) / stride + 1;
  const int ow = (x.width() + 2 * pad - k) / stride + 1;
  Tensor out(out_c, oh, ow);
  for (int o = 0; o < out_c; ++o)
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) {
        double s = bias.empty() ? 0.0 : bias[o];
        for (int c = 0; c < x.channels(); ++c)
          for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
              const int iy = y * stride + i - pad, ix = xx * stride + j - pad;
              if (iy < 0 || ix < 0 || iy >= x.height() || ix >= x.width()) continue;
              s += weight[((o * x.channels() + c) * k + i) * k + j] * x.at(c, iy, ix);
            }
        out.at(o, y, xx) = s;
      }
  return out;
}

double central_difference(const std::function<double()>& f, double* x, double step) {
  const double keep = *x;
  *x = keep + step;
  const double up = f();
  *x = keep - step;
  const double down = f();
  *x = keep;
  return (up - down) / (2.0 * step);
}

double GradCheck::relative_error(double floor) const {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), floor);
}

GradCheck check_parameters(const dehaze::ParameterList& params, const std::function<double()>& loss,
                           std::mt19937_64& rng, int per_param, double step) {
  GradCheck g;
  for (dehaze::Parameter* p : params) {
    std::vector<std::size_t> idx(p->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), per_param));
    for (std::size_t i : idx) {
      g.analytic.push_back(p->grad[i]);
      g.numeric.push_back(central_difference(loss, &p->value[i], step));
    }
  }
  return g;
}

std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("dehaze_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace testing_support
