#ifndef DEHAZE_CONFIG_H_
#define DEHAZE_CONFIG_H_

// Run configuration shared by every command. Loaded from JSON; keys that are
// not listed here are rejected so typos fail loudly.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dehaze/adam.h"
#include "dehaze/haze_model.h"
#include "dehaze/losses.h"
#include "dehaze/model.h"

namespace dehaze {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::string kind = "single";  // "single" or "multiscale"
  int depth = 7;
  bool star = false;
  int width_divisor = 1;
  std::optional<std::vector<int>> dropout_sites;  // default: innermost three
  double dropout_rate = 0.5;
  double leak = 0.2;
  int spp_levels = 4;
  int ssim_window = 11;
  double ssim_sigma = 1.5;

  GeneratorSpec generator_spec() const;
  DiscriminatorSpec discriminator_spec() const;
  SsimOptions ssim_options() const;
};

struct TrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 1;
  int d_update_period = 4;
  int max_epochs = 1;
  std::optional<std::pair<int, int>> pretrain_size{{256, 256}};  // (h, w)
  bool iff_enabled = true;
  int iff_max_side = 1024;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;
  long max_steps = 0;  // per phase; 0 runs whole epochs
  LossWeights weights;

  AdamOptions adam() const;
  void validate() const;
};

struct DataConfig {
  std::string train_manifest;
  std::string val_manifest;
  std::string haze_dir;
  std::string clear_dir;
  std::string match_rule = "stem";  // "stem" or "reside"
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  SynthesisOptions synthesis;
  std::string output_dir = "run";

  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

// Hex SHA-256 of the normalized model section; checkpoints carry it so a
// checkpoint is only ever loaded into the architecture it was written by.
std::string config_hash(const RunConfig& c);
std::string config_hash(const ModelConfig& m);

std::unique_ptr<CganModel> build_model(const ModelConfig& m);

// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace dehaze

#endif  // DEHAZE_CONFIG_H_
