#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dcam/graph.hpp"
#include "dcam/ops.hpp"
#include "dcam/tensor.hpp"

namespace dcam {

/// Architecture description for a dense-connectivity network.
///
/// The layer sequence is fixed: an initial 3x3 convolution (stride 1,
/// padding 1), then per entry of block_sizes a dense block followed by a
/// transition (1x1 convolution to floor(compression * channels), minimum 1,
/// then 2x2 average pooling with stride 2), then batchnorm + relu, global
/// average pooling, a linear head and an elementwise sigmoid. Each dense
/// layer computes batchnorm -> relu -> 3x3 convolution producing
/// growth_rate channels, concatenated onto its input.
struct DenseConfig {
  int input_channels = 1;
  int initial_channels = 16;
  std::vector<int> block_sizes = {2, 4, 4};
  int growth_rate = 8;
  double compression = 0.5;
  int num_classes = 1;
  int image_size = 64;
  std::vector<std::string> class_names = {"Pneumonia"};
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.9;

  /// Throws ConfigError on invalid or inconsistent values, including an
  /// image_size too small for the pooling cascade (names the stage).
  void validate() const;
};

struct ConvLayer {
  Tensor weight;  // [Cout,Cin,Kh,Kw]
  Tensor bias;    // [Cout]
};

struct BatchNormLayer {
  Tensor gamma;
  Tensor beta;
  RunningStats stats;
};

struct DenseLayerUnit {
  BatchNormLayer norm;
  ConvLayer conv;
};

struct DenseBlock {
  std::vector<DenseLayerUnit> layers;
};

struct TransitionLayer {
  ConvLayer conv;  // 1x1 compression, followed by 2x2/2 average pooling
};

struct ForwardResult {
  Tensor probabilities;  // [B, num_classes], each in (0,1)
  Tensor feature_maps;   // [B, K, h, w]: the activations feeding global pooling
};

struct DenseModel {
  DenseConfig config;
  ConvLayer initial;
  std::vector<DenseBlock> blocks;
  std::vector<TransitionLayer> transitions;
  BatchNormLayer final_norm;
  Tensor classifier_weight;  // [num_classes, K]; row c is the CAM weight vector for class c
  Tensor classifier_bias;    // [num_classes]

  // Dataset normalization carried with the model so a checkpoint is
  // self-contained for inference. Applied by pipelines, not by forward().
  std::vector<double> input_mean;
  std::vector<double> input_std;

  /// Learnable tensors with their serialization names, in fixed order.
  std::vector<std::pair<std::string, Tensor>> named_parameters();
  std::vector<Tensor> parameters();
  std::vector<std::pair<std::string, RunningStats*>> named_running_stats();
  void zero_grad();
  DenseModel clone() const;

  /// Channel count K of the feature maps entering global pooling.
  int final_feature_channels() const;
};

/// Builds and initializes a model. Conv and linear weights draw from a
/// uniform distribution on [-1/sqrt(fan_in), 1/sqrt(fan_in)) seeded by
/// derive_seed(seed, "init"); biases start at zero, batchnorm at
/// gamma=1/beta=0. Identical seeds give bit-identical parameters.
DenseModel build_model(const DenseConfig& config, std::uint64_t seed);

/// Runs the network on a [B,C,S,S] batch. Train mode uses batch statistics
/// and updates running stats; eval mode reads running stats and leaves the
/// model untouched.
ForwardResult forward(DenseModel& model, ComputeGraph& g, const Tensor& batch, NormMode mode);

/// Eval-mode forward without gradient recording.
ForwardResult forward(const DenseModel& model, const Tensor& batch);

/// Copies image `index`'s feature maps out of a batched result as [K,h,w].
Tensor image_feature_maps(const ForwardResult& result, std::int64_t index);

}  // namespace dcam
