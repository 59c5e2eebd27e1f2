#include "dehaze/evaluation.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dehaze/image_io.h"
#include "dehaze/model.h"

namespace dehaze {
namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  if (a.empty()) throw std::invalid_argument("mse of empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double nrmse(const Tensor& a, const Tensor& b) {
  const double err = mse(a, b);
  double sq = 0.0;
  for (double v : a.values()) sq += v * v;
  if (sq == 0.0) throw std::invalid_argument("nrmse: the reference image is all zero");
  return std::sqrt(err) / std::sqrt(sq / static_cast<double>(a.size()));
}

double psnr_eval(const Tensor& a, const Tensor& b) {
  const double err = mse(a, b);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kByteRange * kByteRange / err);
}

double ssim_eval(const Tensor& a, const Tensor& b, const SsimOptions& window) {
  SsimOptions o = window;
  o.dynamic_range = kByteRange;
  return ssim(a, b, o);
}

ImageMetrics score_pair(const std::string& id, const Tensor& reference, const Tensor& candidate,
                        const SsimOptions& window) {
  ImageMetrics m;
  m.id = id;
  m.mse = mse(reference, candidate);
  m.nrmse = nrmse(reference, candidate);
  m.psnr = psnr_eval(reference, candidate);
  m.ssim = ssim_eval(reference, candidate, window);
  return m;
}

MetricsReport aggregate(std::vector<ImageMetrics> rows) {
  MetricsReport r;
  r.per_image = std::move(rows);
  r.n = r.per_image.size();
  std::size_t finite = 0;
  for (const auto& m : r.per_image) {
    r.mean_mse += m.mse;
    r.mean_nrmse += m.nrmse;
    r.mean_ssim += m.ssim;
    if (std::isinf(m.psnr)) {
      ++r.psnr_infinite;
    } else {
      r.mean_psnr += m.psnr;
      ++finite;
    }
  }
  if (r.n > 0) {
    r.mean_mse /= static_cast<double>(r.n);
    r.mean_nrmse /= static_cast<double>(r.n);
    r.mean_ssim /= static_cast<double>(r.n);
  }
  r.mean_psnr = finite > 0 ? r.mean_psnr / static_cast<double>(finite)
                           : std::numeric_limits<double>::infinity();
  return r;
}

MetricsReport evaluate_dataset(CganModel& model, const PairManifest& pairs,
                               const NoiseSource& noise, const SsimOptions& window) {
  std::vector<ImageMetrics> rows;
  std::vector<std::string> skipped;
  for (const auto& e : pairs.entries) {
    try {
      const HazyPair p = load_pair(e);
      const Tensor out = model.dehaze(p.haze, noise);
      rows.push_back(score_pair(e.id, to_byte_scale(p.clear), to_byte_scale(out), window));
    } catch (const std::exception& ex) {
      skipped.push_back(e.id + ": " + ex.what());
    }
  }
  MetricsReport r = aggregate(std::move(rows));
  r.skipped = std::move(skipped);
  return r;
}

MetricsReport evaluate_identity(const PairManifest& pairs, const SsimOptions& window) {
  std::vector<ImageMetrics> rows;
  std::vector<std::string> skipped;
  for (const auto& e : pairs.entries) {
    try {
      const HazyPair p = load_pair(e);
      rows.push_back(score_pair(e.id, to_byte_scale(p.clear), to_byte_scale(p.haze), window));
    } catch (const std::exception& ex) {
      skipped.push_back(e.id + ": " + ex.what());
    }
  }
  MetricsReport r = aggregate(std::move(rows));
  r.skipped = std::move(skipped);
  return r;
}

void write_report_table(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report " + path);
  out << "id\tmse\tnrmse\tpsnr\tssim\n";
  for (const auto& m : report.per_image) {
    out << m.id << '\t' << fmt(m.mse) << '\t' << fmt(m.nrmse) << '\t' << fmt(m.psnr) << '\t'
        << fmt(m.ssim) << '\n';
  }
  out << "mean\t" << fmt(report.mean_mse) << '\t' << fmt(report.mean_nrmse) << '\t'
      << fmt(report.mean_psnr) << '\t' << fmt(report.mean_ssim) << '\n';
}

std::string report_summary(const MetricsReport& report) {
  std::ostringstream s;
  s << "images scored: " << report.n << "\n";
  s << "mean MSE:   " << fmt(report.mean_mse) << "\n";
  s << "mean NRMSE: " << fmt(report.mean_nrmse) << "\n";
  s << "mean PSNR:  " << fmt(report.mean_psnr) << " dB";
  if (report.psnr_infinite > 0) {
    s << " (" << report.psnr_infinite << " identical image(s) with infinite PSNR left out)";
  }
  s << "\n";
  s << "mean SSIM:  " << fmt(report.mean_ssim) << "\n";
  for (const auto& id : report.skipped) s << "skipped " << id << "\n";
  return s.str();
}

void write_report_summary(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write summary " + path);
  out << report_summary(report);
}

}  // namespace dehaze
