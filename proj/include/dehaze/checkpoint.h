#ifndef DEHAZE_CHECKPOINT_H_
#define DEHAZE_CHECKPOINT_H_

// Single-file versioned container for model parameters, optimizer moments
// and loop position. Every section carries a SHA-256 digest of its payload.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dehaze/adam.h"
#include "dehaze/model.h"

namespace dehaze {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class Phase : std::uint8_t { kPretrain = 0, kIff = 1 };

std::string phase_name(Phase p);

struct CheckpointMeta {
  std::uint32_t format_version = kCheckpointVersion;
  std::int64_t iteration = 0;      // train steps completed overall
  std::int64_t epoch = 0;          // current epoch within the phase
  std::int64_t step_in_epoch = 0;  // steps of that epoch already done
  Phase phase = Phase::kPretrain;
  std::string config_hash;
  std::string model_kind;
  std::vector<std::string> sections;  // filled in on load

  bool operator==(const CheckpointMeta&) const = default;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kTruncated, kFormat, kVersion, kConfigMismatch, kIntegrity };

  CheckpointError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Writes through a temporary file and renames it into place.
void save_checkpoint(const std::string& path, CganModel& model, const Adam& g_opt,
                     const Adam& d_opt, const CheckpointMeta& meta);

// Validates the whole file before touching the model or optimizers. With a
// non-empty `expected_hash` a different config hash is refused.
CheckpointMeta load_checkpoint(const std::string& path, CganModel& model, Adam& g_opt,
                               Adam& d_opt, const std::string& expected_hash);

// Header only; section digests are still verified.
CheckpointMeta read_checkpoint_meta(const std::string& path);

}  // namespace dehaze

#endif  // DEHAZE_CHECKPOINT_H_
