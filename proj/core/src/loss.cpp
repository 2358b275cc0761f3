#include "dcam/loss.hpp"

#include <cmath>
#include <string>

#include "dcam/error.hpp"

namespace dcam {

namespace {

double clamp_prob(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

bool is_clamped(double p) { return p < kProbClamp || p > 1.0 - kProbClamp; }

double bce_term(double p, double y, double w_pos, double w_neg) {
  const double pc = clamp_prob(p);
  return -w_pos * y * std::log(pc) - w_neg * (1.0 - y) * std::log(1.0 - pc);
}

// d(term)/dp at unclamped p; zero where the clamp is active.
double bce_term_grad(double p, double y, double w_pos, double w_neg) {
  if (is_clamped(p)) return 0.0;
  return -w_pos * y / p + w_neg * (1.0 - y) / (1.0 - p);
}

void require_same_shape(const Tensor& probs, const Tensor& targets, const char* op) {
  if (probs.dims() != targets.dims()) {
    throw ShapeError(std::string(op) + ": probabilities " + dims_to_string(probs.dims()) +
                     " vs targets " + dims_to_string(targets.dims()));
  }
}

}  // namespace

ClassWeights class_weights(std::span<const int> labels) {
  std::int64_t positives = 0;
  for (int y : labels) positives += (y != 0);
  const std::int64_t negatives = static_cast<std::int64_t>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw UsageError("degenerate class distribution: " + std::to_string(positives) +
                     " positive / " + std::to_string(negatives) + " negative training labels");
  }
  const double total = static_cast<double>(positives + negatives);
  ClassWeights w;
  w.w_plus = static_cast<double>(negatives) / total;
  w.w_minus = static_cast<double>(positives) / total;
  w.positive_count = positives;
  w.negative_count = negatives;
  return w;
}

double weighted_bce(double p, int y, const ClassWeights& weights) {
  return bce_term(p, y ? 1.0 : 0.0, weights.w_plus, weights.w_minus);
}

double multilabel_bce(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size()) {
    throw ShapeError("multilabel_bce: " + std::to_string(p.size()) + " probabilities vs " +
                     std::to_string(y.size()) + " labels");
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    loss += bce_term(p[c], y[c] ? 1.0 : 0.0, 1.0, 1.0);
  }
  return loss;
}

Tensor weighted_bce_loss(ComputeGraph& g, const Tensor& probs, const Tensor& targets,
                         const ClassWeights& weights) {
  require_same_shape(probs, targets, "weighted_bce_loss");
  const std::int64_t batch = probs.dim(0);
  if (probs.size() != batch) {
    throw ShapeError("weighted_bce_loss expects one probability per example, got " +
                     dims_to_string(probs.dims()));
  }
  const std::span<const double> p = probs.values();
  const std::span<const double> y = targets.values();
  double total = 0.0;
  for (std::int64_t i = 0; i < batch; ++i) {
    total += bce_term(p[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(i)],
                      weights.w_plus, weights.w_minus);
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const bool wants_grad = g.recording() && probs.requires_grad();
  Tensor out(Dims{1}, std::vector<double>{total * inv_batch}, wants_grad);
  if (wants_grad) {
    Tensor p_t = probs, y_t = targets, out_t = out;
    const double wp = weights.w_plus, wn = weights.w_minus;
    g.record("weighted_bce", {p_t, y_t}, out_t, [p_t, y_t, out_t, wp, wn, inv_batch]() mutable {
      const double go = out_t.grad()[0] * inv_batch;
      const std::span<const double> p = p_t.values();
      const std::span<const double> y = y_t.values();
      std::span<double> dp = p_t.grad();
      for (std::size_t i = 0; i < p.size(); ++i) {
        dp[i] += go * bce_term_grad(p[i], y[i], wp, wn);
      }
    });
  }
  return out;
}

Tensor multilabel_bce_loss(ComputeGraph& g, const Tensor& probs, const Tensor& targets) {
  require_same_shape(probs, targets, "multilabel_bce_loss");
  if (probs.rank() != 2) {
    throw ShapeError("multilabel_bce_loss expects [B,K] probabilities, got " +
                     dims_to_string(probs.dims()));
  }
  const std::int64_t batch = probs.dim(0);
  const std::span<const double> p = probs.values();
  const std::span<const double> y = targets.values();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += bce_term(p[i], y[i], 1.0, 1.0);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const bool wants_grad = g.recording() && probs.requires_grad();
  Tensor out(Dims{1}, std::vector<double>{total * inv_batch}, wants_grad);
  if (wants_grad) {
    Tensor p_t = probs, y_t = targets, out_t = out;
    g.record("multilabel_bce", {p_t, y_t}, out_t, [p_t, y_t, out_t, inv_batch]() mutable {
      const double go = out_t.grad()[0] * inv_batch;
      const std::span<const double> p = p_t.values();
      const std::span<const double> y = y_t.values();
      std::span<double> dp = p_t.grad();
      for (std::size_t i = 0; i < p.size(); ++i) {
        dp[i] += go * bce_term_grad(p[i], y[i], 1.0, 1.0);
      }
    });
  }
  return out;
}

}  // namespace dcam
