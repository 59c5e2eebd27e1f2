#ifndef DEHAZE_EVALUATION_H_
#define DEHAZE_EVALUATION_H_

// Full-reference image quality metrics on byte_scale images ([0, 255]) and
// dataset-level reports.

#include <cstdint>
#include <string>
#include <vector>

#include "dehaze/dataset.h"
#include "dehaze/generator.h"
#include "dehaze/losses.h"
#include "dehaze/tensor.h"

namespace dehaze {

class CganModel;

inline constexpr double kByteRange = 255.0;

double mse(const Tensor& a, const Tensor& b);
// sqrt(mse(a, b)) / sqrt(mean(a^2)); `a` is the reference. Throws
// std::invalid_argument for an all-zero reference.
double nrmse(const Tensor& a, const Tensor& b);
// 10 log10(255^2 / mse); +infinity when the images are identical.
double psnr_eval(const Tensor& a, const Tensor& b);
// Windowed SSIM with L = 255, averaged across channels.
double ssim_eval(const Tensor& a, const Tensor& b, const SsimOptions& window = {});

struct ImageMetrics {
  std::string id;
  double mse = 0.0;
  double nrmse = 0.0;
  double psnr = 0.0;  // may be +infinity
  double ssim = 0.0;
};

struct MetricsReport {
  std::vector<ImageMetrics> per_image;
  double mean_mse = 0.0;
  double mean_nrmse = 0.0;
  double mean_psnr = 0.0;  // over finite rows only
  double mean_ssim = 0.0;
  std::size_t n = 0;
  std::size_t psnr_infinite = 0;  // rows left out of mean_psnr
  std::vector<std::string> skipped;  // ids that could not be scored, with reason
};

ImageMetrics score_pair(const std::string& id, const Tensor& reference, const Tensor& candidate,
                        const SsimOptions& window = {});
MetricsReport aggregate(std::vector<ImageMetrics> rows);

// Dehazes each haze image at its native size, converts to bytes and scores
// against the clear image. Pairs that fail to load or run are skipped and
// listed in the report.
MetricsReport evaluate_dataset(CganModel& model, const PairManifest& pairs,
                               const NoiseSource& noise, const SsimOptions& window = {});
// Scores the haze image itself against the clear image.
MetricsReport evaluate_identity(const PairManifest& pairs, const SsimOptions& window = {});

// Tab-separated table: header, one row per image, then a "mean" row.
void write_report_table(const std::string& path, const MetricsReport& report);
std::string report_summary(const MetricsReport& report);
void write_report_summary(const std::string& path, const MetricsReport& report);

}  // namespace dehaze

#endif  // DEHAZE_EVALUATION_H_
