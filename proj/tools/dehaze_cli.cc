// Command-line front end: synthesize, train, finetune, dehaze, evaluate,
// hazemap.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "json.hpp"

#include "dehaze/checkpoint.h"
#include "dehaze/config.h"
#include "dehaze/dataset.h"
#include "dehaze/evaluation.h"
#include "dehaze/haze_model.h"
#include "dehaze/image_io.h"
#include "dehaze/plot.h"
#include "dehaze/trainer.h"

namespace fs = std::filesystem;
using namespace dehaze;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr const char* kVersion = "1.0.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig load_or_default(const std::string& path) {
  return path.empty() ? config_from_json(nlohmann::json::object()) : load_config(path);
}

void write_run_metadata(const std::string& dir, const std::string& command,
                        const RunConfig& config, std::uint64_t seed) {
  fs::create_directories(dir);
  nlohmann::json j = {
      {"command", command},
      {"config_hash", config_hash(config)},
      {"seed", seed},
      {"config", config_to_json(config)},
      {"versions",
       {{"dehaze", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__}}}};
  std::ofstream out(dir + "/run_metadata.json");
  if (!out) throw DataError("cannot write run metadata in " + dir);
  out << j.dump(2) << "\n";
}

// Restores parameters only; optimizer moments are loaded into throwaway
// optimizers.
CheckpointMeta load_weights(const std::string& path, CganModel& model, const RunConfig& config) {
  Adam g(model.generator_parameters(), config.train.adam());
  Adam d(model.discriminator_parameters(), config.train.adam());
  return load_checkpoint(path, model, g, d, config_hash(config));
}

PairManifest training_manifest(const RunConfig& c) {
  if (!c.data.train_manifest.empty()) return read_manifest(c.data.train_manifest, "train");
  if (c.data.haze_dir.empty() || c.data.clear_dir.empty()) {
    throw UsageError("config needs data.train_manifest or data.haze_dir and data.clear_dir");
  }
  std::vector<std::string> warnings;
  PairManifest m = build_manifest(c.data.haze_dir, c.data.clear_dir,
                                  parse_match_rule(c.data.match_rule), c.train.seed, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return m;
}

int cmd_synthesize(const std::string& config_path, const std::string& clear_dir,
                   const std::string& out_dir, std::optional<std::uint64_t> seed_opt) {
  const RunConfig config = load_or_default(config_path);
  const std::uint64_t seed = seed_opt.value_or(config.train.seed);
  const auto files = list_images(clear_dir);
  if (files.empty()) throw DataError("no images in " + clear_dir);
  fs::create_directories(out_dir + "/haze");
  fs::create_directories(out_dir + "/clear");
  std::mt19937_64 rng(seed);
  PairManifest manifest;
  int failures = 0;
  for (const auto& f : files) {
    const std::string stem = fs::path(f).stem().string();
    // Draw first so a failing file does not shift the parameters of the rest.
    const ScatteringParams params = sample_scattering(rng, config.synthesis);
    try {
      const Tensor bytes = read_image_bytes(f);
      const HazyPair pair = synthesize_pair(bytes * (1.0 / 255.0), params, std::nullopt,
                                            config.synthesis);
      const std::string haze_path = "haze/" + stem + ".png";
      const std::string clear_path = "clear/" + stem + ".png";
      write_image_bytes(out_dir + "/" + haze_path, pair.haze * 255.0);
      write_image_bytes(out_dir + "/" + clear_path, bytes);
      manifest.entries.push_back({stem, haze_path, clear_path});
    } catch (const ImageIoError& e) {
      std::cerr << "error: " << e.what() << "\n";
      ++failures;
    }
  }
  write_manifest(out_dir + "/manifest.tsv", manifest);
  write_run_metadata(out_dir, "synthesize", config, seed);
  std::cout << "wrote " << manifest.size() << " pairs to " << out_dir << "\n";
  return failures > 0 ? kExitData : kExitOk;
}

int run_training(const RunConfig& config, const std::string& resume, bool finetune_only,
                 const std::string& command) {
  auto model = build_model(config.model);
  Trainer trainer(*model, config.train, config_hash(config));
  trainer.initialize();
  if (!resume.empty()) {
    const CheckpointMeta meta = trainer.load(resume);
    std::cout << "resumed from " << resume << " at iteration " << meta.iteration << " ("
              << phase_name(meta.phase) << ", epoch " << meta.epoch << ")\n";
  }
  const std::string out = config.output_dir;
  fs::create_directories(out);
  write_run_metadata(out, command, config, config.train.seed);
  {
    std::ofstream cfg(out + "/config.json");
    cfg << config_to_json(config).dump(2) << "\n";
  }
  std::ofstream log(out + "/train_log.jsonl", resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw DataError("cannot write " + out + "/train_log.jsonl");
  trainer.set_log(&log);

  ManifestPairSource data(training_manifest(config));
  const std::string ckpt_dir = out + "/checkpoints";
  if (!finetune_only && config.train.pretrain_size && trainer.phase() == Phase::kPretrain) {
    const PhaseResult r = trainer.pretrain(data, ckpt_dir);
    std::cout << "pretraining: " << r.steps << " steps\n";
    if (!r.completed) {
      std::cout << "stopped at max_steps; resume from " << ckpt_dir << "/latest.ckpt\n";
      return kExitOk;
    }
  }
  if (finetune_only || config.train.iff_enabled) {
    const PhaseResult r = trainer.finetune_iff(data, ckpt_dir);
    std::cout << "fine-tuning: " << r.steps << " steps, " << r.skipped << " skipped\n";
    if (!r.completed) std::cout << "stopped at max_steps; resume from " << ckpt_dir << "/latest.ckpt\n";
  } else {
    trainer.save(ckpt_dir + "/latest.ckpt");
  }
  return kExitOk;
}

std::vector<std::string> collect_inputs(const std::string& input) {
  if (fs::is_directory(input)) return list_images(input);
  if (!fs::exists(input)) throw DataError("no such input: " + input);
  return {input};
}

int cmd_dehaze(const RunConfig& config, const std::string& checkpoint, const std::string& input,
               const std::string& out_dir, std::uint64_t seed, bool hazemap) {
  auto model = build_model(config.model);
  load_weights(checkpoint, *model, config);
  fs::create_directories(out_dir);
  int failures = 0, written = 0;
  for (const auto& f : collect_inputs(input)) {
    try {
      const Tensor haze = read_image_unit(f);
      const NoiseSource noise{seed};
      const Tensor result = hazemap ? model->haze_map(haze, noise) : model->dehaze(haze, noise);
      write_image_unit(out_dir + "/" + fs::path(f).stem().string() + ".png", result);
      ++written;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << f << ": " << e.what() << "\n";
      ++failures;
    } catch (const ImageIoError& e) {
      std::cerr << "error: " << e.what() << "\n";
      ++failures;
    }
  }
  write_run_metadata(out_dir, hazemap ? "hazemap" : "dehaze", config, seed);
  std::cout << "wrote " << written << " image(s) to " << out_dir << "\n";
  return failures > 0 ? kExitData : kExitOk;
}

int cmd_evaluate(const RunConfig& config, const std::string& checkpoint,
                 const std::string& manifest_path, const std::string& out_dir,
                 std::uint64_t seed) {
  const PairManifest pairs = read_manifest(manifest_path, "val");
  fs::create_directories(out_dir);
  const SsimOptions window = config.model.ssim_options();
  auto model = build_model(config.model);

  std::vector<std::string> checkpoints;
  if (fs::is_directory(checkpoint)) {
    for (const auto& e : fs::directory_iterator(checkpoint)) {
      const std::string name = e.path().filename().string();
      if (e.path().extension() == ".ckpt" && name.find("_epoch_") != std::string::npos) {
        checkpoints.push_back(e.path().string());
      }
    }
    std::sort(checkpoints.begin(), checkpoints.end(), [](const std::string& a, const std::string& b) {
      // pretrain epochs before iff epochs, then by epoch number
      const bool ia = fs::path(a).filename().string().rfind("iff", 0) == 0;
      const bool ib = fs::path(b).filename().string().rfind("iff", 0) == 0;
      return ia != ib ? ib : a < b;
    });
    if (checkpoints.empty()) throw DataError("no epoch checkpoints in " + checkpoint);
  } else {
    checkpoints.push_back(checkpoint);
  }

  PlotSeries mse_s{"MSE", {}, {}}, nrmse_s{"NRMSE", {}, {}}, psnr_s{"PSNR", {}, {}},
      ssim_s{"SSIM", {}, {}};
  std::ofstream curve;
  if (checkpoints.size() > 1) {
    curve.open(out_dir + "/validation_curve.tsv");
    curve << "index\tcheckpoint\tmse\tnrmse\tpsnr\tssim\n";
  }
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    load_weights(checkpoints[k], *model, config);
    const MetricsReport r = evaluate_dataset(*model, pairs, NoiseSource{seed}, window);
    const std::string stem = checkpoints.size() > 1 ? fs::path(checkpoints[k]).stem().string()
                                                    : std::string("report");
    write_report_table(out_dir + "/" + stem + ".tsv", r);
    write_report_summary(out_dir + "/" + stem + "_summary.txt", r);
    std::cout << fs::path(checkpoints[k]).filename().string() << "\n" << report_summary(r);
    const double x = static_cast<double>(k + 1);
    mse_s.x.push_back(x);
    mse_s.y.push_back(r.mean_mse);
    nrmse_s.x.push_back(x);
    nrmse_s.y.push_back(r.mean_nrmse);
    psnr_s.x.push_back(x);
    psnr_s.y.push_back(r.mean_psnr);
    ssim_s.x.push_back(x);
    ssim_s.y.push_back(r.mean_ssim);
    if (curve.is_open()) {
      curve << k + 1 << '\t' << fs::path(checkpoints[k]).filename().string() << '\t' << r.mean_mse
            << '\t' << r.mean_nrmse << '\t' << r.mean_psnr << '\t' << r.mean_ssim << '\n';
    }
  }
  if (checkpoints.size() > 1) {
    write_line_plot(out_dir + "/mse.png", "validation mean MSE", "checkpoint", {mse_s});
    write_line_plot(out_dir + "/nrmse.png", "validation mean NRMSE", "checkpoint", {nrmse_s});
    write_line_plot(out_dir + "/psnr.png", "validation mean PSNR (dB)", "checkpoint", {psnr_s});
    write_line_plot(out_dir + "/ssim.png", "validation mean SSIM", "checkpoint", {ssim_s});
  }
  write_run_metadata(out_dir, "evaluate", config, seed);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-image dehazing with a conditional GAN (UR-Net generator, SPP discriminator)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, checkpoint, input, output, clear_dir, manifest, resume;
  std::optional<std::uint64_t> seed;

  auto* syn = app.add_subcommand("synthesize", "Synthesize haze images from clear images");
  syn->add_option("--config", config_path, "JSON config (synthesis ranges, seed)");
  syn->add_option("--clear-dir", clear_dir, "Directory of clear images")->required();
  syn->add_option("--out-dir", output, "Output directory")->required();
  syn->add_option("--seed", seed, "Overrides train.seed");

  auto* train = app.add_subcommand("train", "Fixed-size pretraining followed by IFF");
  train->add_option("--config", config_path, "JSON config")->required();
  train->add_option("--resume", resume, "Checkpoint to resume from");

  auto* fine = app.add_subcommand("finetune", "Input-size-flexibility fine-tuning");
  fine->add_option("--config", config_path, "JSON config")->required();
  fine->add_option("--checkpoint", checkpoint, "Checkpoint to continue from")->required();

  auto* dh = app.add_subcommand("dehaze", "Dehaze images at their native size");
  dh->add_option("--config", config_path, "JSON config")->required();
  dh->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  dh->add_option("--input", input, "Image file or directory")->required();
  dh->add_option("--out-dir", output, "Output directory")->required();
  dh->add_option("--seed", seed, "Dropout seed (default train.seed)");

  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint (or a directory of them)");
  ev->add_option("--config", config_path, "JSON config")->required();
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file or checkpoint directory")->required();
  ev->add_option("--manifest", manifest, "Validation manifest")->required();
  ev->add_option("--out-dir", output, "Report directory")->required();
  ev->add_option("--seed", seed, "Dropout seed (default train.seed)");

  auto* hm = app.add_subcommand("hazemap", "Write the haze map of an image");
  hm->add_option("--config", config_path, "JSON config")->required();
  hm->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  hm->add_option("--input", input, "Image file or directory")->required();
  hm->add_option("--out-dir", output, "Output directory")->required();
  hm->add_option("--seed", seed, "Dropout seed (default train.seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*syn) return cmd_synthesize(config_path, clear_dir, output, seed);
    const RunConfig config = load_config(config_path);
    const std::uint64_t s = seed.value_or(config.train.seed);
    if (*train) return run_training(config, resume, false, "train");
    if (*fine) return run_training(config, checkpoint, true, "finetune");
    if (*dh) return cmd_dehaze(config, checkpoint, input, output, s, false);
    if (*ev) return cmd_evaluate(config, checkpoint, manifest, output, s);
    if (*hm) return cmd_dehaze(config, checkpoint, input, output, s, true);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
