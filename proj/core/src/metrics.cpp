#include "dcam/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "dcam/error.hpp"

namespace dcam {

F1Result f1(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw ShapeError("f1: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " truths");
  }
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool t = truth[i] != 0;
    tp += (p && t);
    fp += (p && !t);
    fn += (!p && t);
  }
  if (tp + fp + fn == 0) return F1Result{1.0, true};
  return F1Result{2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn), false};
}

void RaterMatrix::validate() const {
  if (rater_names.size() < 2) throw UsageError("rater matrix needs at least 2 raters");
  if (model_index >= static_cast<int>(rater_names.size())) {
    throw UsageError("model_index out of range");
  }
  for (const std::vector<int>& row : labels) {
    if (row.size() != rater_names.size()) {
      throw ShapeError("rater matrix row has " + std::to_string(row.size()) + " entries for " +
                       std::to_string(rater_names.size()) + " raters");
    }
    for (int v : row) {
      if (v != 0 && v != 1) throw UsageError("rater labels must be 0 or 1");
    }
  }
}

namespace {

MultiRaterF1 multi_rater_f1_impl(const RaterMatrix& m, std::span<const std::int32_t> indices) {
  m.validate();
  const std::size_t raters = m.num_raters();
  std::vector<int> a(indices.size());
  std::vector<int> b(indices.size());

  MultiRaterF1 out;
  out.mean_f1.resize(raters, 0.0);
  for (std::size_t r = 0; r < raters; ++r) {
    double total = 0.0;
    for (std::size_t s = 0; s < raters; ++s) {
      if (s == r) continue;
      for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::vector<int>& row = m.labels[static_cast<std::size_t>(indices[i])];
        a[i] = row[r];
        b[i] = row[s];
      }
      total += f1(a, b).value;
    }
    out.mean_f1[r] = total / static_cast<double>(raters - 1);
  }

  double rad_total = 0.0;
  std::size_t rad_count = 0;
  for (std::size_t r = 0; r < raters; ++r) {
    if (static_cast<int>(r) == m.model_index) continue;
    rad_total += out.mean_f1[r];
    ++rad_count;
  }
  out.radiologist_average = rad_total / static_cast<double>(rad_count);
  return out;
}

}  // namespace

MultiRaterF1 multi_rater_f1(const RaterMatrix& m) {
  std::vector<std::int32_t> all(m.num_images());
  std::iota(all.begin(), all.end(), 0);
  return multi_rater_f1_impl(m, all);
}

MultiRaterF1 multi_rater_f1(const RaterMatrix& m, std::span<const std::int32_t> image_indices) {
  return multi_rater_f1_impl(m, image_indices);
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("auroc: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  std::int64_t positives = 0;
  for (int y : labels) positives += (y != 0);
  const std::int64_t negatives = static_cast<std::int64_t>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw UsageError("auroc undefined: labels contain a single class");
  }

  // Rank statistic with mid-ranks for ties:
  // AUROC = (sum of positive ranks - P(P+1)/2) / (P*N).
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });

  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] != 0) positive_rank_sum += mid_rank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

std::vector<int> binarize(std::span<const double> probabilities, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw UsageError("binarize threshold must lie in (0,1)");
  }
  std::vector<int> labels(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    labels[i] = probabilities[i] >= threshold ? 1 : 0;
  }
  return labels;
}

double best_f1_threshold(std::span<const double> probabilities, std::span<const int> labels) {
  if (probabilities.size() != labels.size() || probabilities.empty()) {
    throw UsageError("best_f1_threshold needs matching non-empty inputs");
  }
  std::vector<double> candidates(probabilities.begin(), probabilities.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double best_threshold = candidates.front();
  double best_score = -1.0;
  std::vector<int> pred(probabilities.size());
  for (double threshold : candidates) {
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      pred[i] = probabilities[i] >= threshold ? 1 : 0;
    }
    const double score = f1(pred, labels).value;
    if (score > best_score) {
      best_score = score;
      best_threshold = threshold;
    }
  }
  return best_threshold;
}

}  // namespace dcam
