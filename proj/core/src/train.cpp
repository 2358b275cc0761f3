#include "dcam/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dcam/error.hpp"

namespace dcam {

namespace {

void check_examples(const std::vector<Example>& examples, const DenseConfig& cfg,
                    const char* which) {
  if (examples.empty()) throw UsageError(std::string(which) + " set is empty");
  for (const Example& e : examples) {
    if (static_cast<int>(e.targets.size()) != cfg.num_classes) {
      throw ShapeError(std::string(which) + " example has " + std::to_string(e.targets.size()) +
                       " targets, model expects " + std::to_string(cfg.num_classes));
    }
  }
}

// Stacks the chosen examples into [B,C,H,W] images and [B,K] targets,
// optionally augmenting each image.
std::pair<Tensor, Tensor> make_batch(const std::vector<Example>& examples,
                                     std::span<const std::size_t> indices, int num_classes,
                                     bool do_augment, double flip_probability, SplitMix64* rng) {
  const Tensor& first = examples[indices[0]].image;
  const std::int64_t channels = first.dim(0);
  const std::int64_t height = first.dim(1);
  const std::int64_t width = first.dim(2);
  const std::int64_t sample = channels * height * width;
  const std::int64_t batch = static_cast<std::int64_t>(indices.size());

  Tensor images(Dims{batch, channels, height, width});
  Tensor targets(Dims{batch, num_classes});
  double* img = images.values().data();
  double* tgt = targets.values().data();
  for (std::int64_t b = 0; b < batch; ++b) {
    const Example& e = examples[indices[static_cast<std::size_t>(b)]];
    Tensor picked = do_augment ? augment(e.image, flip_probability, *rng) : e.image;
    const std::span<const double> src = picked.values();
    std::copy(src.begin(), src.end(), img + b * sample);
    for (int k = 0; k < num_classes; ++k) tgt[b * num_classes + k] = e.targets[static_cast<std::size_t>(k)];
  }
  return {std::move(images), std::move(targets)};
}

Tensor task_loss(ComputeGraph& g, Task task, const Tensor& probs, const Tensor& targets,
                 const ClassWeights& weights) {
  if (task == Task::Pneumonia) return weighted_bce_loss(g, probs, targets, weights);
  return multilabel_bce_loss(g, probs, targets);
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (beta1 <= 0.0 || beta1 >= 1.0) throw ConfigError("beta1 must lie in (0,1)");
  if (beta2 <= 0.0 || beta2 >= 1.0) throw ConfigError("beta2 must lie in (0,1)");
  if (adam_epsilon <= 0.0) throw ConfigError("adam_epsilon must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  if (plateau_delta <= 0.0) throw ConfigError("plateau_delta must be positive");
  if (plateau_patience_epochs < 1) throw ConfigError("plateau_patience_epochs must be positive");
  if (decay_factor <= 1.0) throw ConfigError("decay_factor must exceed 1");
  if (min_lr <= 0.0) throw ConfigError("min_lr must be positive");
  if (flip_probability < 0.0 || flip_probability > 1.0) {
    throw ConfigError("flip_probability must lie in [0,1]");
  }
}

double TrainHistory::best_validation_loss() const {
  if (best_index < 0 || best_index >= static_cast<std::ptrdiff_t>(records.size())) {
    throw StateError("training history has no best record");
  }
  return records[static_cast<std::size_t>(best_index)].validation_loss;
}

Tensor augment(const Tensor& image, double flip_probability, SplitMix64& rng) {
  if (image.rank() != 3) {
    throw ShapeError("augment expects a [C,H,W] image, got " + dims_to_string(image.dims()));
  }
  const bool flip = rng.next_double() < flip_probability;
  if (!flip) return image;
  const std::int64_t channels = image.dim(0);
  const std::int64_t height = image.dim(1);
  const std::int64_t width = image.dim(2);
  Tensor out(image.dims());
  const double* src = image.values().data();
  double* dst = out.values().data();
  for (std::int64_t c = 0; c < channels; ++c) {
    for (std::int64_t h = 0; h < height; ++h) {
      const double* srow = src + (c * height + h) * width;
      double* drow = dst + (c * height + h) * width;
      for (std::int64_t w = 0; w < width; ++w) drow[w] = srow[width - 1 - w];
    }
  }
  return out;
}

double evaluate_loss(DenseModel& model, const std::vector<Example>& examples, Task task,
                     const ClassWeights& weights, int batch_size) {
  const int num_classes = model.config.num_classes;
  double total = 0.0;
  std::size_t done = 0;
  while (done < examples.size()) {
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(batch_size),
                                                   examples.size() - done);
    std::vector<std::size_t> indices(take);
    std::iota(indices.begin(), indices.end(), done);
    auto [images, targets] = make_batch(examples, indices, num_classes, false, 0.0, nullptr);
    ComputeGraph g(false);
    const ForwardResult result = forward(model, g, images, NormMode::Eval);
    const Tensor loss = task_loss(g, task, result.probabilities, targets, weights);
    total += loss.item() * static_cast<double>(take);
    done += take;
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train_loop(const DenseModel& initial, const std::vector<Example>& train_set,
                       const std::vector<Example>& validation_set, const TrainConfig& cfg,
                       Task task) {
  cfg.validate();
  check_examples(train_set, initial.config, "training");
  check_examples(validation_set, initial.config, "validation");
  if (task == Task::Pneumonia && initial.config.num_classes != 1) {
    throw ConfigError("pneumonia task requires a single-output model, got num_classes " +
                      std::to_string(initial.config.num_classes));
  }

  ClassWeights weights;
  if (task == Task::Pneumonia) {
    std::vector<int> labels;
    labels.reserve(train_set.size());
    for (const Example& e : train_set) labels.push_back(e.targets[0] > 0.5 ? 1 : 0);
    weights = class_weights(labels);
  }

  TrainResult result;
  result.weights = weights;
  DenseModel working = initial.clone();
  result.best_model = initial.clone();
  if (cfg.max_epochs == 0) return result;

  std::vector<Tensor> params = working.parameters();
  AdamState adam(params);
  SplitMix64 shuffle_rng(derive_seed(cfg.seed, "train.shuffle"));
  SplitMix64 augment_rng(derive_seed(cfg.seed, "train.augment"));
  PlateauScheduler scheduler(cfg.learning_rate, cfg.plateau());
  double current_lr = cfg.learning_rate;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double train_total = 0.0;
    std::size_t offset = 0;
    while (offset < order.size()) {
      const std::size_t take =
          std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - offset);
      const std::span<const std::size_t> indices(order.data() + offset, take);
      auto [images, targets] = make_batch(train_set, indices, initial.config.num_classes, true,
                                          cfg.flip_probability, &augment_rng);
      ComputeGraph g;
      const ForwardResult fwd = forward(working, g, images, NormMode::Train);
      const Tensor loss = task_loss(g, task, fwd.probabilities, targets, weights);
      g.backward(loss);
      AdamParams hp = cfg.adam();
      hp.learning_rate = current_lr;
      adam_step(params, adam, hp);
      working.zero_grad();
      train_total += loss.item() * static_cast<double>(take);
      offset += take;
    }

    const double train_loss = train_total / static_cast<double>(train_set.size());
    const double val_loss = evaluate_loss(working, validation_set, task, weights, cfg.batch_size);

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = train_loss;
    record.validation_loss = val_loss;
    record.learning_rate = current_lr;
    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_model = working.clone();
      result.history.best_index = static_cast<std::ptrdiff_t>(result.history.records.size());
      record.checkpointed = true;
    }
    result.history.records.push_back(record);
    current_lr = scheduler.observe(val_loss);
  }
  return result;
}

}  // namespace dcam
