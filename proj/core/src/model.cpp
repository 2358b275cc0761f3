#include "dcam/model.hpp"

#include <cmath>
#include <set>

#include "dcam/error.hpp"
#include "dcam/rng.hpp"

namespace dcam {

namespace {

// Transition channel rule: floor(compression * channels), at least 1.
std::int64_t compressed_channels(std::int64_t channels, double compression) {
  const std::int64_t c = static_cast<std::int64_t>(std::floor(compression * static_cast<double>(channels)));
  return c < 1 ? 1 : c;
}

}  // namespace

void DenseConfig::validate() const {
  if (input_channels < 1) throw ConfigError("input_channels must be positive");
  if (initial_channels < 1) throw ConfigError("initial_channels must be positive");
  if (block_sizes.empty()) throw ConfigError("block_sizes must not be empty");
  for (int b : block_sizes) {
    if (b < 1) throw ConfigError("every dense block needs at least one layer");
  }
  if (growth_rate < 1) throw ConfigError("growth_rate must be positive");
  if (!(compression > 0.0 && compression <= 1.0)) {
    throw ConfigError("compression must lie in (0,1]");
  }
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  if (image_size < 1) throw ConfigError("image_size must be positive");
  if (static_cast<int>(class_names.size()) != num_classes) {
    throw ConfigError("class_names count " + std::to_string(class_names.size()) +
                      " does not match num_classes " + std::to_string(num_classes));
  }
  std::set<std::string> unique(class_names.begin(), class_names.end());
  if (unique.size() != class_names.size()) throw ConfigError("class_names must be unique");
  if (bn_epsilon < 0.0) throw ConfigError("bn_epsilon must be non-negative");
  if (bn_momentum < 0.0 || bn_momentum > 1.0) throw ConfigError("bn_momentum must be in [0,1]");

  // Pooling cascade: every transition halves the spatial extent and needs
  // at least a 2x2 input.
  std::int64_t spatial = image_size;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    if (spatial < 2) {
      throw ConfigError("transition " + std::to_string(b) + ": spatial extent " +
                        std::to_string(spatial) +
                        " is smaller than the 2x2 pooling window (image_size " +
                        std::to_string(image_size) + " too small)");
    }
    spatial = (spatial - 2) / 2 + 1;
  }
}

std::vector<std::pair<std::string, Tensor>> DenseModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("initial.weight", initial.weight);
  out.emplace_back("initial.bias", initial.bias);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t l = 0; l < blocks[b].layers.size(); ++l) {
      const std::string prefix = "block" + std::to_string(b) + ".layer" + std::to_string(l);
      DenseLayerUnit& unit = blocks[b].layers[l];
      out.emplace_back(prefix + ".norm.gamma", unit.norm.gamma);
      out.emplace_back(prefix + ".norm.beta", unit.norm.beta);
      out.emplace_back(prefix + ".conv.weight", unit.conv.weight);
      out.emplace_back(prefix + ".conv.bias", unit.conv.bias);
    }
    const std::string tprefix = "transition" + std::to_string(b);
    out.emplace_back(tprefix + ".conv.weight", transitions[b].conv.weight);
    out.emplace_back(tprefix + ".conv.bias", transitions[b].conv.bias);
  }
  out.emplace_back("final_norm.gamma", final_norm.gamma);
  out.emplace_back("final_norm.beta", final_norm.beta);
  out.emplace_back("classifier.weight", classifier_weight);
  out.emplace_back("classifier.bias", classifier_bias);
  return out;
}

std::vector<Tensor> DenseModel::parameters() {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named_parameters()) out.push_back(tensor);
  return out;
}

std::vector<std::pair<std::string, RunningStats*>> DenseModel::named_running_stats() {
  std::vector<std::pair<std::string, RunningStats*>> out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t l = 0; l < blocks[b].layers.size(); ++l) {
      out.emplace_back("block" + std::to_string(b) + ".layer" + std::to_string(l) + ".norm",
                       &blocks[b].layers[l].norm.stats);
    }
  }
  out.emplace_back("final_norm", &final_norm.stats);
  return out;
}

void DenseModel::zero_grad() {
  for (Tensor& t : parameters()) t.zero_grad();
}

DenseModel DenseModel::clone() const {
  DenseModel copy;
  copy.config = config;
  copy.initial = ConvLayer{initial.weight.clone(), initial.bias.clone()};
  copy.blocks.reserve(blocks.size());
  for (const DenseBlock& block : blocks) {
    DenseBlock nb;
    nb.layers.reserve(block.layers.size());
    for (const DenseLayerUnit& unit : block.layers) {
      DenseLayerUnit nu;
      nu.norm.gamma = unit.norm.gamma.clone();
      nu.norm.beta = unit.norm.beta.clone();
      nu.norm.stats = unit.norm.stats;
      nu.conv.weight = unit.conv.weight.clone();
      nu.conv.bias = unit.conv.bias.clone();
      nb.layers.push_back(std::move(nu));
    }
    copy.blocks.push_back(std::move(nb));
  }
  copy.transitions.reserve(transitions.size());
  for (const TransitionLayer& t : transitions) {
    copy.transitions.push_back(TransitionLayer{ConvLayer{t.conv.weight.clone(), t.conv.bias.clone()}});
  }
  copy.final_norm.gamma = final_norm.gamma.clone();
  copy.final_norm.beta = final_norm.beta.clone();
  copy.final_norm.stats = final_norm.stats;
  copy.classifier_weight = classifier_weight.clone();
  copy.classifier_bias = classifier_bias.clone();
  copy.input_mean = input_mean;
  copy.input_std = input_std;
  return copy;
}

int DenseModel::final_feature_channels() const {
  return static_cast<int>(classifier_weight.dim(1));
}

DenseModel build_model(const DenseConfig& config, std::uint64_t seed) {
  config.validate();

  DenseModel model;
  model.config = config;

  auto make_bn = [](std::int64_t channels) {
    BatchNormLayer bn;
    bn.gamma = Tensor::full(Dims{channels}, 1.0, true);
    bn.beta = Tensor(Dims{channels}, true);
    bn.stats = RunningStats(channels);
    return bn;
  };
  auto make_conv = [](std::int64_t in, std::int64_t out, std::int64_t k) {
    return ConvLayer{Tensor(Dims{out, in, k, k}, true), Tensor(Dims{out}, true)};
  };

  std::int64_t channels = config.initial_channels;
  model.initial = make_conv(config.input_channels, channels, 3);

  for (int block_size : config.block_sizes) {
    DenseBlock block;
    for (int l = 0; l < block_size; ++l) {
      DenseLayerUnit unit;
      unit.norm = make_bn(channels);
      unit.conv = make_conv(channels, config.growth_rate, 3);
      block.layers.push_back(std::move(unit));
      channels += config.growth_rate;
    }
    model.blocks.push_back(std::move(block));
    const std::int64_t compressed = compressed_channels(channels, config.compression);
    model.transitions.push_back(TransitionLayer{make_conv(channels, compressed, 1)});
    channels = compressed;
  }

  model.final_norm = make_bn(channels);
  model.classifier_weight = Tensor(Dims{config.num_classes, channels}, true);
  model.classifier_bias = Tensor(Dims{config.num_classes}, true);

  model.input_mean.assign(static_cast<std::size_t>(config.input_channels), 0.0);
  model.input_std.assign(static_cast<std::size_t>(config.input_channels), 1.0);

  // Weight init: uniform scaled by 1/sqrt(fan_in), one stream consumed in
  // parameter order so the layout alone determines every draw.
  SplitMix64 rng(derive_seed(seed, "init"));
  for (auto& [name, tensor] : model.named_parameters()) {
    const bool is_weight = name.ends_with(".weight") || name == "classifier.weight";
    if (!is_weight) continue;
    std::int64_t fan_in = 1;
    const Dims& d = tensor.dims();
    for (std::size_t i = 1; i < d.size(); ++i) fan_in *= d[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : tensor.values()) v = rng.next_uniform(-bound, bound);
  }
  return model;
}

ForwardResult forward(DenseModel& model, ComputeGraph& g, const Tensor& batch, NormMode mode) {
  const DenseConfig& cfg = model.config;
  if (batch.rank() != 4 || batch.dim(1) != cfg.input_channels ||
      batch.dim(2) != cfg.image_size || batch.dim(3) != cfg.image_size) {
    throw ShapeError("forward expects input [B," + std::to_string(cfg.input_channels) + "," +
                     std::to_string(cfg.image_size) + "," + std::to_string(cfg.image_size) +
                     "], got " + dims_to_string(batch.dims()));
  }

  Tensor x = conv2d(g, batch, model.initial.weight, model.initial.bias, 1, 1);
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    for (DenseLayerUnit& unit : model.blocks[b].layers) {
      Tensor h = batchnorm(g, x, unit.norm.gamma, unit.norm.beta, unit.norm.stats, mode,
                           cfg.bn_momentum, cfg.bn_epsilon);
      h = relu(g, h);
      h = conv2d(g, h, unit.conv.weight, unit.conv.bias, 1, 1);
      x = concat_channels(g, x, h);
    }
    TransitionLayer& t = model.transitions[b];
    x = conv2d(g, x, t.conv.weight, t.conv.bias, 1, 0);
    x = avg_pool2d(g, x, 2, 2);
  }
  x = batchnorm(g, x, model.final_norm.gamma, model.final_norm.beta, model.final_norm.stats, mode,
                cfg.bn_momentum, cfg.bn_epsilon);
  x = relu(g, x);

  ForwardResult result;
  result.feature_maps = x;
  Tensor pooled = global_avg_pool(g, x);
  Tensor logits = linear(g, pooled, model.classifier_weight, model.classifier_bias);
  result.probabilities = sigmoid(g, logits);
  return result;
}

ForwardResult forward(const DenseModel& model, const Tensor& batch) {
  // Eval mode touches no model state, so the cast stays observable-const.
  ComputeGraph g(false);
  return forward(const_cast<DenseModel&>(model), g, batch, NormMode::Eval);
}

Tensor image_feature_maps(const ForwardResult& result, std::int64_t index) {
  const Tensor& maps = result.feature_maps;
  if (maps.rank() != 4 || index < 0 || index >= maps.dim(0)) {
    throw UsageError("image index " + std::to_string(index) + " out of range for feature maps " +
                     dims_to_string(maps.dims()));
  }
  const std::int64_t k = maps.dim(1), h = maps.dim(2), w = maps.dim(3);
  const std::int64_t sample = k * h * w;
  std::vector<double> values(static_cast<std::size_t>(sample));
  const double* src = maps.values().data() + index * sample;
  std::copy(src, src + sample, values.begin());
  return Tensor(Dims{k, h, w}, std::move(values));
}

}  // namespace dcam
