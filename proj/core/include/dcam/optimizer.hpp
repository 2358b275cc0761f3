#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcam/tensor.hpp"

namespace dcam {

struct AdamParams {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates plus the shared step counter, one slot per
/// parameter tensor in the order they were registered.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::span<const Tensor> params);

  std::int64_t step_count() const { return steps_; }
  std::size_t slots() const { return first_.size(); }

  friend void adam_step(std::span<Tensor> params, AdamState& state, const AdamParams& hp);

 private:
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::int64_t steps_ = 0;
};

/// One bias-corrected Adam update, reading each parameter's accumulated
/// gradient:
///   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
///   theta -= lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
/// Gradients are left untouched; the caller zeroes them between steps.
void adam_step(std::span<Tensor> params, AdamState& state, const AdamParams& hp);

struct PlateauConfig {
  double delta = 1e-4;        // required improvement of the best validation loss
  int patience = 1;           // epochs without improvement before a decay
  double decay_factor = 10.0;
  double min_lr = 1e-6;
};

/// Decays the learning rate by decay_factor (never below min_lr) whenever
/// the best validation loss fails to improve by more than delta for
/// `patience` consecutive epochs; each decay resets the patience counter.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, const PlateauConfig& config);

  /// Feeds one epoch's validation loss; returns the rate for the next epoch.
  double observe(double validation_loss);
  double lr() const { return lr_; }

 private:
  PlateauConfig config_;
  double lr_;
  double best_;
  int stale_epochs_ = 0;
};

/// Replays the plateau rule over a full validation-loss history, starting
/// from current_lr, and returns the resulting rate.
double lr_on_plateau(std::span<const double> history, double current_lr,
                     const PlateauConfig& config);

}  // namespace dcam
