#ifndef DEHAZE_ADAM_H_
#define DEHAZE_ADAM_H_

#include <cstdint>
#include <vector>

#include "dehaze/layers.h"

namespace dehaze {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables

  void validate() const;
};

// First/second moment estimates, one pair of vectors per parameter in the
// order of the list the optimizer was built on.
struct AdamState {
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  bool operator==(const AdamState&) const = default;
};

class Adam {
 public:
  Adam(ParameterList params, AdamOptions options);

  // One bias-corrected update from the accumulated gradients.
  void step();

  const AdamState& state() const { return state_; }
  // Throws std::invalid_argument when the moment shapes differ from the
  // parameter list.
  void set_state(AdamState state);
  const AdamOptions& options() const { return options_; }
  const ParameterList& parameters() const { return params_; }

 private:
  ParameterList params_;
  AdamOptions options_;
  AdamState state_;
};

}  // namespace dehaze

#endif  // DEHAZE_ADAM_H_
