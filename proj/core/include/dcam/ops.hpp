#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcam/graph.hpp"
#include "dcam/tensor.hpp"

namespace dcam {

enum class Activation { Relu, Sigmoid };
enum class NormMode { Train, Eval };

/// Per-channel running statistics owned by a batchnorm layer. batches == 0
/// means the statistics have never been updated and eval mode must refuse
/// to use them.
struct RunningStats {
  std::vector<double> mean;
  std::vector<double> var;
  std::int64_t batches = 0;

  RunningStats() = default;
  explicit RunningStats(std::int64_t channels)
      : mean(static_cast<std::size_t>(channels), 0.0),
        var(static_cast<std::size_t>(channels), 1.0) {}
  bool populated() const { return batches > 0; }
};

/// 2-D cross-correlation of [B,Cin,H,W] with [Cout,Cin,Kh,Kw] plus a
/// per-output-channel bias. Output spatial extent follows
/// floor((H + 2*padding - Kh)/stride) + 1.
Tensor conv2d(ComputeGraph& g, const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int stride, int padding);

/// Batch normalization over [B,C,H,W] with per-channel statistics taken
/// over B,H,W. Train mode uses batch statistics (biased variance) and
/// folds them into the running averages:
///   running = momentum * running + (1 - momentum) * batch.
/// Eval mode normalizes with the running statistics and mutates nothing.
Tensor batchnorm(ComputeGraph& g, const Tensor& input, const Tensor& gamma, const Tensor& beta,
                 RunningStats& stats, NormMode mode, double momentum, double epsilon);

Tensor activation(ComputeGraph& g, const Tensor& input, Activation kind);
Tensor relu(ComputeGraph& g, const Tensor& input);
Tensor sigmoid(ComputeGraph& g, const Tensor& input);

/// Mean over non-overlapping (or strided) square windows.
Tensor avg_pool2d(ComputeGraph& g, const Tensor& input, int window, int stride);

/// [B,C,H,W] -> [B,C] spatial mean.
Tensor global_avg_pool(ComputeGraph& g, const Tensor& input);

/// Channel concatenation: [B,C1,H,W] ++ [B,C2,H,W] -> [B,C1+C2,H,W].
Tensor concat_channels(ComputeGraph& g, const Tensor& a, const Tensor& b);

/// Channel slice [begin, end) of a [B,C,H,W] tensor.
Tensor slice_channels(ComputeGraph& g, const Tensor& input, std::int64_t begin, std::int64_t end);

/// Affine map: [B,F] x [K,F]^T + [K] -> [B,K].
Tensor linear(ComputeGraph& g, const Tensor& input, const Tensor& weights, const Tensor& bias);

/// Sum of all elements -> scalar.
Tensor sum_all(ComputeGraph& g, const Tensor& input);

/// Fixed-coefficient contraction sum_i coeffs[i]*input[i] -> scalar.
Tensor weighted_sum(ComputeGraph& g, const Tensor& input, std::span<const double> coeffs);

}  // namespace dcam
