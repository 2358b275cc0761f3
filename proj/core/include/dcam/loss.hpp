#pragma once

#include <cstdint>
#include <span>

#include "dcam/graph.hpp"
#include "dcam/tensor.hpp"

namespace dcam {

/// Probabilities are clamped into [kProbClamp, 1-kProbClamp] before any
/// logarithm so saturated sigmoids cannot produce non-finite losses.
inline constexpr double kProbClamp = 1e-12;

/// Prevalence weights for the binary task: w_plus = |N|/(|P|+|N|),
/// w_minus = |P|/(|P|+|N|). They always sum to 1.
struct ClassWeights {
  double w_plus = 0.5;
  double w_minus = 0.5;
  std::int64_t positive_count = 0;
  std::int64_t negative_count = 0;
};

/// Computes ClassWeights from the training labels. Throws UsageError when
/// all labels agree (degenerate class distribution).
ClassWeights class_weights(std::span<const int> labels);

/// -w_plus*y*ln(p) - w_minus*(1-y)*ln(1-p), with p clamped.
double weighted_bce(double p, int y, const ClassWeights& weights);

/// Sum over classes of the unweighted binary cross entropies, p clamped.
/// Throws ShapeError when the vectors disagree in length.
double multilabel_bce(std::span<const double> p, std::span<const int> y);

/// Batch losses as graph nodes (mean over the examples in the batch).
/// probs and targets must have identical shapes: [B] or [B,1] for the
/// weighted loss, [B,K] for the multi-label loss. Targets hold 0/1.
Tensor weighted_bce_loss(ComputeGraph& g, const Tensor& probs, const Tensor& targets,
                         const ClassWeights& weights);
Tensor multilabel_bce_loss(ComputeGraph& g, const Tensor& probs, const Tensor& targets);

}  // namespace dcam
