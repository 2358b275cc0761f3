#pragma once

#include <cstdint>
#include <vector>

#include "dcam/loss.hpp"
#include "dcam/model.hpp"
#include "dcam/optimizer.hpp"
#include "dcam/rng.hpp"

namespace dcam {

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 16;
  int max_epochs = 20;
  double plateau_delta = 1e-4;
  int plateau_patience_epochs = 1;
  double decay_factor = 10.0;
  double min_lr = 1e-6;
  double flip_probability = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
  AdamParams adam() const { return {learning_rate, beta1, beta2, adam_epsilon}; }
  PlateauConfig plateau() const {
    return {plateau_delta, plateau_patience_epochs, decay_factor, min_lr};
  }
};

enum class Task { Pneumonia, MultiLabel };

/// One training/validation example: a [C,H,W] image and its target vector
/// (length 1 for the binary task, num_classes for the multi-label task).
struct Example {
  Tensor image;
  std::vector<double> targets;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double learning_rate = 0.0;  // rate in effect during this epoch
  bool checkpointed = false;   // validation loss improved; model was snapshotted
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  std::ptrdiff_t best_index = -1;  // record with the minimum validation loss

  double best_validation_loss() const;
};

struct TrainResult {
  DenseModel best_model;
  TrainHistory history;
  ClassWeights weights;  // meaningful for the pneumonia task
};

/// Mirrors the width axis with probability flip_probability, consuming
/// exactly one draw from the stream either way.
Tensor augment(const Tensor& image, double flip_probability, SplitMix64& rng);

/// Mean per-example loss of the model over a dataset, eval mode.
double evaluate_loss(DenseModel& model, const std::vector<Example>& examples, Task task,
                     const ClassWeights& weights, int batch_size);

/// Epochs of shuffled minibatches with horizontal-flip augmentation, Adam
/// updates, per-epoch validation, plateau learning-rate decay, and
/// best-validation-loss snapshotting. Deterministic given cfg.seed.
TrainResult train_loop(const DenseModel& initial, const std::vector<Example>& train_set,
                       const std::vector<Example>& validation_set, const TrainConfig& cfg,
                       Task task);

}  // namespace dcam
