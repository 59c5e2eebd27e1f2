#include "dehaze/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include "dehaze/resize.h"

namespace dehaze {
namespace {

// Epoch orders of the two phases come from disjoint seed streams.
constexpr std::uint64_t kIffEpochStream = 1u << 20;

std::string epoch_checkpoint_name(Phase p, std::int64_t epoch) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_epoch_%03lld.ckpt", phase_name(p).c_str(),
                static_cast<long long>(epoch));
  return buf;
}

}  // namespace

TrainingPair ManifestPairSource::get(std::size_t index) {
  const PairEntry& e = manifest_.entries.at(index);
  HazyPair p = load_pair(e);
  return {e.id, std::move(p.haze), std::move(p.clear)};
}

Tensor resize_for_pretraining(const Tensor& image, int height, int width) {
  Tensor out = resize_bicubic(image, height, width);
  for (double& v : out.values()) v = std::clamp(v, -1.0, 1.0);
  return out;
}

Tensor cap_longest_side(const Tensor& image, int max_side) {
  const int longest = std::max(image.height(), image.width());
  if (longest <= max_side) return image;
  const double scale = static_cast<double>(max_side) / longest;
  const int h = std::max(1, static_cast<int>(std::lround(image.height() * scale)));
  const int w = std::max(1, static_cast<int>(std::lround(image.width() * scale)));
  return resize_for_pretraining(image, std::min(h, max_side), std::min(w, max_side));
}

Trainer::Trainer(CganModel& model, TrainConfig config, std::string config_hash)
    : model_(model),
      config_(std::move(config)),
      config_hash_(std::move(config_hash)),
      g_opt_(model.generator_parameters(), config_.adam()),
      d_opt_(model.discriminator_parameters(), config_.adam()) {
  config_.validate();
}

void Trainer::initialize() { model_.initialize(config_.seed); }

StepRecord Trainer::train_step(const Tensor& haze, const Tensor& clear, const std::string& id) {
  const auto start = std::chrono::steady_clock::now();
  StepRecord r;
  r.iteration = iteration_ + 1;
  const NoiseSource noise{mix_seed(config_.seed, static_cast<std::uint64_t>(r.iteration))};
  model_.generate(haze, noise);

  const ParameterList d_params = model_.discriminator_parameters();
  const ParameterList g_params = model_.generator_parameters();
  if (r.iteration % config_.d_update_period == 0) {
    zero_grads(d_params);
    r.d_loss = model_.discriminator_backward(haze, clear);
    if (!std::isfinite(r.d_loss)) {
      throw std::domain_error("non-finite discriminator loss at iteration " +
                              std::to_string(r.iteration));
    }
    d_opt_.step();
    r.d_updated = true;
  }
  zero_grads(g_params);
  zero_grads(d_params);
  r.losses = model_.generator_backward(haze, clear, config_.weights);
  g_opt_.step();
  // The generator pass leaves adversarial gradients in the discriminator.
  zero_grads(d_params);

  iteration_ = r.iteration;
  if (r.d_updated) ++d_updates_;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log_step(r, id, seconds);
  return r;
}

PhaseResult Trainer::pretrain(PairSource& data, const std::string& checkpoint_dir) {
  if (!config_.pretrain_size) throw std::invalid_argument("pretraining needs a pretrain_size");
  if (phase_ != Phase::kPretrain) return {true, 0, 0};
  return run_phase(data, checkpoint_dir);
}

PhaseResult Trainer::finetune_iff(PairSource& data, const std::string& checkpoint_dir) {
  begin_iff();
  return run_phase(data, checkpoint_dir);
}

void Trainer::begin_iff() {
  if (phase_ == Phase::kIff) return;
  phase_ = Phase::kIff;
  epoch_ = 0;
  step_in_epoch_ = 0;
}

PhaseResult Trainer::run_phase(PairSource& data, const std::string& checkpoint_dir) {
  if (data.size() == 0) throw std::invalid_argument("training set is empty");
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);
  const int min_size = model_.min_input_size();
  PhaseResult result;
  const std::uint64_t stream = phase_ == Phase::kIff ? kIffEpochStream : 0;

  while (epoch_ < config_.max_epochs) {
    const auto order =
        epoch_order(data.size(), config_.seed, stream + static_cast<std::uint64_t>(epoch_));
    while (step_in_epoch_ < static_cast<std::int64_t>(order.size())) {
      if (config_.max_steps > 0 && result.steps >= config_.max_steps) {
        if (!checkpoint_dir.empty()) save(checkpoint_dir + "/latest.ckpt");
        return result;
      }
      TrainingPair p = data.get(order[step_in_epoch_]);
      ++step_in_epoch_;
      if (phase_ == Phase::kPretrain) {
        const auto [h, w] = *config_.pretrain_size;
        if (p.haze.height() != h || p.haze.width() != w) {
          p.haze = resize_for_pretraining(p.haze, h, w);
          p.clear = resize_for_pretraining(p.clear, h, w);
          ++resizes_;
        }
      } else {
        if (std::max(p.haze.height(), p.haze.width()) > config_.iff_max_side) {
          p.haze = cap_longest_side(p.haze, config_.iff_max_side);
          p.clear = cap_longest_side(p.clear, config_.iff_max_side);
          ++resizes_;
        }
        if (std::min(p.haze.height(), p.haze.width()) < min_size) {
          warn("skipping '" + p.id + "': " + p.haze.shape().str() +
               " is below the minimum input size " + std::to_string(min_size));
          ++result.skipped;
          continue;
        }
      }
      train_step(p.haze, p.clear, p.id);
      ++result.steps;
    }
    ++epoch_;
    step_in_epoch_ = 0;
    if (!checkpoint_dir.empty()) {
      save(checkpoint_dir + "/" + epoch_checkpoint_name(phase_, epoch_));
      save(checkpoint_dir + "/latest.ckpt");
    }
  }
  result.completed = true;
  return result;
}

void Trainer::save(const std::string& path) const {
  CheckpointMeta meta;
  meta.iteration = iteration_;
  meta.epoch = epoch_;
  meta.step_in_epoch = step_in_epoch_;
  meta.phase = phase_;
  meta.config_hash = config_hash_;
  save_checkpoint(path, model_, g_opt_, d_opt_, meta);
}

CheckpointMeta Trainer::load(const std::string& path) {
  CheckpointMeta meta = load_checkpoint(path, model_, g_opt_, d_opt_, config_hash_);
  iteration_ = meta.iteration;
  epoch_ = meta.epoch;
  step_in_epoch_ = meta.step_in_epoch;
  phase_ = meta.phase;
  d_updates_ = iteration_ / config_.d_update_period;
  return meta;
}

void Trainer::warn(const std::string& msg) const {
  if (warn_) {
    warn_(msg);
  } else {
    std::cerr << "warning: " << msg << "\n";
  }
}

void Trainer::log_step(const StepRecord& r, const std::string& id, double seconds) const {
  if (!log_) return;
  const LossBreakdown& b = r.losses;
  nlohmann::json j = {{"iteration", r.iteration},
                      {"phase", phase_name(phase_)},
                      {"epoch", epoch_},
                      {"id", id},
                      {"d_updated", r.d_updated},
                      {"d_loss", r.d_loss},
                      {"consistency", b.consistency},
                      {"adversarial_g", b.adversarial_g},
                      {"adversarial_d", b.adversarial_d},
                      {"l1", b.l1},
                      {"ssim_loss", b.ssim_loss},
                      {"psnr_loss", b.psnr_loss},
                      {"weight_decay", b.weight_decay},
                      {"total", b.total},
                      {"wall_time", seconds}};
  *log_ << j.dump() << "\n";
  log_->flush();
}

}  // namespace dehaze
