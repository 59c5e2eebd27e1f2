#ifndef DEHAZE_TRAINER_H_
#define DEHAZE_TRAINER_H_

// Alternating generator/discriminator optimization: the generator is updated
// on every step, the discriminator on every d_update_period-th step. Training
// runs as a fixed-size pretraining phase followed by native-size fine-tuning
// (IFF), with per-epoch checkpoints and mid-epoch resume.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "dehaze/adam.h"
#include "dehaze/checkpoint.h"
#include "dehaze/config.h"
#include "dehaze/dataset.h"
#include "dehaze/model.h"

namespace dehaze {

struct TrainingPair {
  std::string id;
  Tensor haze;
  Tensor clear;
};

class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::size_t size() const = 0;
  virtual TrainingPair get(std::size_t index) = 0;
};

class MemoryPairSource : public PairSource {
 public:
  explicit MemoryPairSource(std::vector<TrainingPair> pairs) : pairs_(std::move(pairs)) {}
  std::size_t size() const override { return pairs_.size(); }
  TrainingPair get(std::size_t index) override { return pairs_.at(index); }

 private:
  std::vector<TrainingPair> pairs_;
};

// Decodes pairs from disk on demand.
class ManifestPairSource : public PairSource {
 public:
  explicit ManifestPairSource(PairManifest manifest) : manifest_(std::move(manifest)) {}
  std::size_t size() const override { return manifest_.size(); }
  TrainingPair get(std::size_t index) override;

 private:
  PairManifest manifest_;
};

struct StepRecord {
  std::int64_t iteration = 0;
  bool d_updated = false;
  double d_loss = 0.0;  // of the discriminator pass, when one ran
  LossBreakdown losses;
};

struct PhaseResult {
  bool completed = false;  // false when max_steps stopped the phase early
  std::int64_t steps = 0;
  std::int64_t skipped = 0;
};

// Bicubic resize to (h, w), clamped back into [-1, 1].
Tensor resize_for_pretraining(const Tensor& image, int height, int width);
// Downscales so the longer side is at most `max_side`; smaller images are
// returned unchanged.
Tensor cap_longest_side(const Tensor& image, int max_side);

class Trainer {
 public:
  Trainer(CganModel& model, TrainConfig config, std::string config_hash);

  void initialize();

  // One optimization step on a unit_signed pair. The step index is the
  // running iteration count plus one; throws std::domain_error naming the
  // offending term when a loss is not finite.
  StepRecord train_step(const Tensor& haze, const Tensor& clear, const std::string& id = "");

  // Runs the pretraining epochs with every pair resized to pretrain_size.
  PhaseResult pretrain(PairSource& data, const std::string& checkpoint_dir);
  // Switches to IFF (moments carried over) if still in pretraining, then
  // runs its epochs at native size.
  PhaseResult finetune_iff(PairSource& data, const std::string& checkpoint_dir);
  void begin_iff();

  void save(const std::string& path) const;
  CheckpointMeta load(const std::string& path);

  void set_log(std::ostream* log) { log_ = log; }
  void set_warning_sink(std::function<void(const std::string&)> sink) { warn_ = std::move(sink); }

  CganModel& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  const Adam& generator_optimizer() const { return g_opt_; }
  const Adam& discriminator_optimizer() const { return d_opt_; }
  std::int64_t iteration() const { return iteration_; }
  std::int64_t epoch() const { return epoch_; }
  std::int64_t step_in_epoch() const { return step_in_epoch_; }
  Phase phase() const { return phase_; }
  std::int64_t discriminator_updates() const { return d_updates_; }
  std::int64_t resize_count() const { return resizes_; }

 private:
  PhaseResult run_phase(PairSource& data, const std::string& checkpoint_dir);
  void warn(const std::string& msg) const;
  void log_step(const StepRecord& r, const std::string& id, double seconds) const;

  CganModel& model_;
  TrainConfig config_;
  std::string config_hash_;
  mutable Adam g_opt_;
  mutable Adam d_opt_;
  std::int64_t iteration_ = 0;
  std::int64_t epoch_ = 0;
  std::int64_t step_in_epoch_ = 0;
  Phase phase_ = Phase::kPretrain;
  std::int64_t d_updates_ = 0;
  std::int64_t resizes_ = 0;
  std::ostream* log_ = nullptr;
  std::function<void(const std::string&)> warn_;
};

}  // namespace dehaze

#endif  // DEHAZE_TRAINER_H_
