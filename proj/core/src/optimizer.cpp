#include "dcam/optimizer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dcam/error.hpp"

namespace dcam {

AdamState::AdamState(std::span<const Tensor> params) {
  first_.reserve(params.size());
  second_.reserve(params.size());
  for (const Tensor& p : params) {
    first_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
    second_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
  }
}

void adam_step(std::span<Tensor> params, AdamState& state, const AdamParams& hp) {
  if (params.size() != state.first_.size()) {
    throw ShapeError("adam_step got " + std::to_string(params.size()) +
                     " parameters for a state with " + std::to_string(state.first_.size()) +
                     " slots");
  }
  state.steps_ += 1;
  const double t = static_cast<double>(state.steps_);
  const double bias1 = 1.0 - std::pow(hp.beta1, t);
  const double bias2 = 1.0 - std::pow(hp.beta2, t);

  for (std::size_t s = 0; s < params.size(); ++s) {
    Tensor& p = params[s];
    std::vector<double>& m = state.first_[s];
    std::vector<double>& v = state.second_[s];
    if (m.size() != static_cast<std::size_t>(p.size())) {
      throw ShapeError("adam_step parameter " + std::to_string(s) + " has " +
                       std::to_string(p.size()) + " elements, state slot has " +
                       std::to_string(m.size()));
    }
    const std::span<const double> g = p.grad();
    std::span<double> values = p.values();
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
      v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      values[i] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
    }
  }
}

PlateauScheduler::PlateauScheduler(double initial_lr, const PlateauConfig& config)
    : config_(config), lr_(initial_lr), best_(std::numeric_limits<double>::infinity()) {
  if (config.decay_factor <= 1.0) throw UsageError("plateau decay_factor must exceed 1");
  if (config.patience < 1) throw UsageError("plateau patience must be at least 1 epoch");
}

double PlateauScheduler::observe(double validation_loss) {
  if (validation_loss < best_ - config_.delta) {
    best_ = validation_loss;
    stale_epochs_ = 0;
    return lr_;
  }
  // Keep the best-so-far tight even when the step was below delta.
  if (validation_loss < best_) best_ = validation_loss;
  stale_epochs_ += 1;
  if (stale_epochs_ >= config_.patience) {
    lr_ = std::max(lr_ / config_.decay_factor, config_.min_lr);
    stale_epochs_ = 0;
  }
  return lr_;
}

double lr_on_plateau(std::span<const double> history, double current_lr,
                     const PlateauConfig& config) {
  if (history.empty()) throw UsageError("lr_on_plateau needs at least one completed epoch");
  PlateauScheduler scheduler(current_lr, config);
  for (double loss : history) scheduler.observe(loss);
  return scheduler.lr();
}

}  // namespace dcam
