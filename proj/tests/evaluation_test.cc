#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "dehaze/evaluation.h"
#include "dehaze/image_io.h"
#include "support.h"

using namespace dehaze;
using testing_support::random_bytes;

TEST(Metrics, MseExamples) {
  const Tensor a(3, 4, 4, 10.0), b(3, 4, 4, 12.0);
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mse(a, b), 4.0);
  EXPECT_THROW(mse(a, Tensor(3, 4, 5)), std::invalid_argument);
}

TEST(Metrics, NrmseExamples) {
  std::mt19937_64 rng(1);
  const Tensor a = random_bytes(rng, 3, 6, 6);
  EXPECT_EQ(nrmse(a, a), 0.0);
  EXPECT_NEAR(nrmse(a, Tensor(a.shape(), 0.0)), 1.0, 1e-12);
  EXPECT_THROW(nrmse(Tensor(3, 2, 2, 0.0), Tensor(3, 2, 2, 1.0)), std::invalid_argument);
}

TEST(Metrics, PsnrExamples) {
  const Tensor a(1, 2, 2, 0.0), b(1, 2, 2, 255.0);
  EXPECT_NEAR(psnr_eval(a, b), 0.0, 1e-12);
  const Tensor c(1, 5, 5, 100.0), d(1, 5, 5, 100.0 + std::sqrt(655.36));
  EXPECT_NEAR(psnr_eval(c, d), 10.0 * std::log10(255.0 * 255.0 / 655.36), 1e-9);
  EXPECT_NEAR(psnr_eval(c, d), 19.97, 0.005);
  EXPECT_TRUE(std::isinf(psnr_eval(c, c)));
}

TEST(Metrics, SsimExamples) {
  std::mt19937_64 rng(2);
  const Tensor a = random_bytes(rng, 3, 16, 16);
  EXPECT_NEAR(ssim_eval(a, a), 1.0, 1e-12);
  // Constant black against constant white: only the luminance term remains.
  const double s = ssim_eval(Tensor(3, 16, 16, 0.0), Tensor(3, 16, 16, 255.0));
  const double c1 = std::pow(0.01 * 255, 2);
  EXPECT_NEAR(s, c1 / (255.0 * 255.0 + c1), 1e-12);
  EXPECT_LT(s, 0.01);
  EXPECT_THROW(ssim_eval(Tensor(3, 8, 8), Tensor(3, 8, 8)), std::invalid_argument);
}

TEST(Metrics, MatchReferenceImplementations) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Tensor a = random_bytes(rng, 3, 20, 17), b = random_bytes(rng, 3, 20, 17);
    EXPECT_NEAR(mse(a, b), testing_support::ref_mse(a, b), 1e-6);
    EXPECT_NEAR(nrmse(a, b), testing_support::ref_nrmse(a, b), 1e-9);
    EXPECT_NEAR(psnr_eval(a, b), testing_support::ref_psnr_eval(a, b), 1e-9);
    EXPECT_NEAR(ssim_eval(a, b), testing_support::ref_ssim(a, b, 11, 1.5, 255.0), 1e-5);
  }
}

TEST(Metrics, Properties) {
  std::mt19937_64 rng(4);
  const Tensor ref = random_bytes(rng, 3, 16, 16);
  const Tensor far = random_bytes(rng, 3, 16, 16);
  EXPECT_DOUBLE_EQ(psnr_eval(ref, far), psnr_eval(far, ref));
  // Shrinking every error toward the reference never makes scores worse.
  double prev_mse = mse(ref, far), prev_psnr = psnr_eval(ref, far), prev_nrmse = nrmse(ref, far);
  for (double shrink : {0.8, 0.5, 0.2, 0.05}) {
    const Tensor closer = ref + (far - ref) * shrink;
    EXPECT_LE(mse(ref, closer), prev_mse);
    EXPECT_LE(nrmse(ref, closer), prev_nrmse);
    EXPECT_GE(psnr_eval(ref, closer), prev_psnr);
    prev_mse = mse(ref, closer);
    prev_nrmse = nrmse(ref, closer);
    prev_psnr = psnr_eval(ref, closer);
  }
}

TEST(Report, MeansAndInfiniteRows) {
  std::vector<ImageMetrics> rows = {{"a", 1.0, 0.1, 30.0, 0.9},
                                    {"b", 3.0, 0.3, 20.0, 0.7},
                                    {"c", 0.0, 0.0, INFINITY, 1.0}};
  const MetricsReport r = aggregate(rows);
  EXPECT_EQ(r.n, 3u);
  EXPECT_DOUBLE_EQ(r.mean_mse, 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.mean_psnr, 25.0);
  EXPECT_EQ(r.psnr_infinite, 1u);
  EXPECT_NE(report_summary(r).find("infinite"), std::string::npos);
  std::reverse(rows.begin(), rows.end());
  const MetricsReport s = aggregate(rows);
  EXPECT_DOUBLE_EQ(s.mean_mse, r.mean_mse);
  EXPECT_DOUBLE_EQ(s.mean_ssim, r.mean_ssim);
}

TEST(Report, IdentityDatasetAndTableFile) {
  const std::string dir = testing_support::temp_dir("eval");
  std::mt19937_64 rng(5);
  PairManifest m;
  for (int i = 0; i < 3; ++i) {
    const std::string path = dir + "/img" + std::to_string(i) + ".png";
    write_image_bytes(path, random_bytes(rng, 3, 16, 12));
    m.entries.push_back({"img" + std::to_string(i), path, path});
  }
  m.entries.push_back({"broken", dir + "/missing.png", dir + "/missing.png"});
  const MetricsReport r = evaluate_identity(m);
  EXPECT_EQ(r.n, 3u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].rfind("broken", 0), 0u);
  for (const auto& row : r.per_image) {
    EXPECT_EQ(row.mse, 0.0);
    EXPECT_EQ(row.nrmse, 0.0);
    EXPECT_TRUE(std::isinf(row.psnr));
    EXPECT_NEAR(row.ssim, 1.0, 1e-12);
  }
  write_report_table(dir + "/r.tsv", r);
  std::ifstream in(dir + "/r.tsv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "id\tmse\tnrmse\tpsnr\tssim");
  EXPECT_EQ(first, "img0\t0\t0\tinf\t1");
  std::filesystem::remove_all(dir);
}
