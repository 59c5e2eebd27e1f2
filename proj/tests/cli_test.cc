#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dehaze/dataset.h"
#include "dehaze/image_io.h"
#include "support.h"

using namespace dehaze;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DEHAZE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_scene(const std::string& path, std::uint64_t seed, int h, int w) {
  write_image_bytes(path, testing_support::synthetic_scene(seed, h, w) * 255.0);
}

// One small trained model shared by every test in the suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::string(testing_support::temp_dir("cli"));
    const std::string& d = *dir_;
    fs::create_directories(d + "/clear");
    for (int i = 0; i < 3; ++i) write_scene(d + "/clear/s" + std::to_string(i) + ".png", i, 40, 40);
    ASSERT_EQ(run_cli("synthesize --clear-dir " + d + "/clear --out-dir " + d + "/syn --seed 5"), 0);
    std::ofstream(d + "/config.json") << R"({
      "model": {"depth": 5, "width_divisor": 16},
      "train": {"max_epochs": 1, "pretrain_size": [32, 32], "seed": 3},
      "data": {"train_manifest": ")" << d << R"(/syn/manifest.tsv"},
      "output_dir": ")" << d << R"(/run"
    })";
    ASSERT_EQ(run_cli("train --config " + d + "/config.json"), 0);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static std::string config() { return *dir_ + "/config.json"; }
  static std::string checkpoint() { return *dir_ + "/run/checkpoints/latest.ckpt"; }
  static std::string* dir_;
};

std::string* CliTest::dir_ = nullptr;

}  // namespace

TEST_F(CliTest, SynthesizeWritesOnePairPerImage) {
  const PairManifest m = read_manifest(*dir_ + "/syn/manifest.tsv");
  EXPECT_EQ(m.size(), 3u);
  EXPECT_TRUE(fs::exists(*dir_ + "/syn/run_metadata.json"));
  for (const auto& e : m.entries) EXPECT_NO_THROW(load_pair(e));
}

TEST_F(CliTest, SynthesizeIsSeedDeterministic) {
  const std::string& d = *dir_;
  ASSERT_EQ(run_cli("synthesize --clear-dir " + d + "/clear --out-dir " + d + "/syn2 --seed 5"), 0);
  ASSERT_EQ(run_cli("synthesize --clear-dir " + d + "/clear --out-dir " + d + "/syn3 --seed 6"), 0);
  EXPECT_EQ(slurp(d + "/syn/haze/s1.png"), slurp(d + "/syn2/haze/s1.png"));
  EXPECT_NE(slurp(d + "/syn/haze/s1.png"), slurp(d + "/syn3/haze/s1.png"));
}

TEST_F(CliTest, ZeroScatteringLeavesImagesUnchanged) {
  const std::string& d = *dir_;
  std::ofstream(d + "/clearsky.json") << R"({"synthesis": {"beta_min": 0, "beta_max": 0}})";
  ASSERT_EQ(run_cli("synthesize --config " + d + "/clearsky.json --clear-dir " + d +
                    "/clear --out-dir " + d + "/syn0"),
            0);
  for (int i = 0; i < 3; ++i) {
    const std::string name = "/s" + std::to_string(i) + ".png";
    EXPECT_EQ(read_image_bytes(d + "/syn0/haze" + name), read_image_bytes(d + "/clear" + name));
  }
}

TEST_F(CliTest, TrainWritesRunArtifacts) {
  const std::string& d = *dir_;
  EXPECT_TRUE(fs::exists(checkpoint()));
  EXPECT_TRUE(fs::exists(d + "/run/run_metadata.json"));
  EXPECT_TRUE(fs::exists(d + "/run/config.json"));
  std::ifstream log(d + "/run/train_log.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  EXPECT_EQ(lines, 6);  // one epoch of three pairs in each phase
  EXPECT_TRUE(fs::exists(d + "/run/checkpoints/pretrain_epoch_001.ckpt"));
  EXPECT_TRUE(fs::exists(d + "/run/checkpoints/iff_epoch_001.ckpt"));
}

TEST_F(CliTest, DehazeKeepsNativeSize) {
  const std::string& d = *dir_;
  fs::create_directories(d + "/odd");
  write_scene(d + "/odd/wide.png", 11, 367, 541);
  ASSERT_EQ(run_cli("dehaze --config " + config() + " --checkpoint " + checkpoint() + " --input " +
                    d + "/odd/wide.png --out-dir " + d + "/dehazed"),
            0);
  const Tensor out = read_image_bytes(d + "/dehazed/wide.png");
  EXPECT_EQ(out.height(), 367);
  EXPECT_EQ(out.width(), 541);
  EXPECT_EQ(out.channels(), 3);
}

TEST_F(CliTest, HazemapWritesOneMapPerImage) {
  const std::string& d = *dir_;
  ASSERT_EQ(run_cli("hazemap --config " + config() + " --checkpoint " + checkpoint() +
                    " --input " + d + "/syn/haze --out-dir " + d + "/maps"),
            0);
  for (int i = 0; i < 3; ++i) {
    const Tensor m = read_image_bytes(d + "/maps/s" + std::to_string(i) + ".png");
    EXPECT_EQ(m.height(), 40);
    EXPECT_EQ(m.width(), 40);
  }
}

TEST_F(CliTest, EvaluateWritesReportsAndCurves) {
  const std::string& d = *dir_;
  ASSERT_EQ(run_cli("evaluate --config " + config() + " --checkpoint " + checkpoint() +
                    " --manifest " + d + "/syn/manifest.tsv --out-dir " + d + "/eval1"),
            0);
  EXPECT_TRUE(fs::exists(d + "/eval1/run_metadata.json"));
  ASSERT_EQ(run_cli("evaluate --config " + config() + " --checkpoint " + d + "/run/checkpoints --manifest " +
                    d + "/syn/manifest.tsv --out-dir " + d + "/eval2"),
            0);
  for (const char* f : {"validation_curve.tsv", "mse.png", "nrmse.png", "psnr.png", "ssim.png"}) {
    EXPECT_TRUE(fs::exists(d + "/eval2/" + f)) << f;
  }
}

TEST_F(CliTest, ExitCodes) {
  const std::string& d = *dir_;
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("dehaze --config " + config()), 1);
  EXPECT_EQ(run_cli("train --config " + d + "/missing.json"), 1);
  std::ofstream(d + "/typo.json") << R"({"train": {"learnng_rate": 1}})";
  EXPECT_EQ(run_cli("train --config " + d + "/typo.json"), 1);
  const std::string bytes = slurp(checkpoint());
  std::ofstream(d + "/cut.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_EQ(run_cli("dehaze --config " + config() + " --checkpoint " + d + "/cut.ckpt --input " +
                    d + "/syn/haze --out-dir " + d + "/never"),
            2);
  std::ofstream(d + "/other.json") << R"({"model": {"depth": 4, "width_divisor": 16}})";
  EXPECT_EQ(run_cli("dehaze --config " + d + "/other.json --checkpoint " + checkpoint() +
                    " --input " + d + "/syn/haze --out-dir " + d + "/never"),
            2);
}

TEST(HazeMapImage, SignedUnitMapsToBytes) {
  const std::string dir = testing_support::temp_dir("mapimg");
  Tensor m(1, 2, 3, 0.0);
  m.at(0, 0, 0) = -1.0;
  m.at(0, 0, 1) = 1.0;
  m.at(0, 0, 2) = -4.0;
  write_image_unit(dir + "/m.png", m);
  const Tensor b = read_image_bytes(dir + "/m.png");
  EXPECT_EQ(b.at(0, 0, 0), 0.0);
  EXPECT_EQ(b.at(0, 0, 1), 255.0);
  EXPECT_EQ(b.at(0, 0, 2), 0.0);
  EXPECT_EQ(b.at(0, 1, 1), 128.0);
  fs::remove_all(dir);
}
