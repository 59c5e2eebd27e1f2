#include "dehaze/adam.h"

#include <cmath>
#include <stdexcept>

namespace dehaze {

void AdamOptions::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (clip_norm < 0.0) throw std::invalid_argument("clip_norm must be non-negative");
}

Adam::Adam(ParameterList params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  options_.validate();
  for (const Parameter* p : params_) {
    state_.m.emplace_back(p->size(), 0.0);
    state_.v.emplace_back(p->size(), 0.0);
  }
}

void Adam::step() {
  double scale = 1.0;
  if (options_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Parameter* p : params_) {
      for (double g : p->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > options_.clip_norm) scale = options_.clip_norm / norm;
  }
  ++state_.t;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state_.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state_.t));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    auto& m = state_.m[k];
    auto& v = state_.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i] * scale;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p.value[i] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

void Adam::set_state(AdamState state) {
  if (state.m.size() != params_.size() || state.v.size() != params_.size()) {
    throw std::invalid_argument("optimizer state covers " + std::to_string(state.m.size()) +
                                " parameters, expected " + std::to_string(params_.size()));
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (state.m[k].size() != params_[k]->size() || state.v[k].size() != params_[k]->size()) {
      throw std::invalid_argument("optimizer moments for " + params_[k]->name +
                                  " have the wrong length");
    }
  }
  if (state.t < 0) throw std::invalid_argument("optimizer step count is negative");
  state_ = std::move(state);
}

}  // namespace dehaze
