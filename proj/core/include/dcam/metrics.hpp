#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dcam {

/// F1 = 2TP / (2TP + FP + FN). When neither vector has a positive the
/// score is defined as 1.0 and flagged degenerate (perfect agreement on an
/// all-negative set is not a failure).
struct F1Result {
  double value = 0.0;
  bool degenerate = false;
};

F1Result f1(std::span<const int> pred, std::span<const int> truth);

/// Binary labels from several raters over the same images; one column may
/// be flagged as the model.
struct RaterMatrix {
  std::vector<std::string> rater_names;
  std::vector<std::string> image_ids;           // may be empty (indices used)
  std::vector<std::vector<int>> labels;         // [image][rater], entries 0/1
  int model_index = -1;                         // -1: no model column

  std::size_t num_images() const { return labels.size(); }
  std::size_t num_raters() const { return rater_names.size(); }
  void validate() const;
};

struct MultiRaterF1 {
  std::vector<double> mean_f1;   // per rater: mean F1 against every other rater
  double radiologist_average = 0.0;  // mean over the non-model raters
};

/// For each rater, the F1 of their labels against each other rater's
/// labels as ground truth, averaged over those raters.
MultiRaterF1 multi_rater_f1(const RaterMatrix& m);

/// Same, restricted to a resampled multiset of image indices.
MultiRaterF1 multi_rater_f1(const RaterMatrix& m, std::span<const std::int32_t> image_indices);

/// Probability that a uniformly random positive outranks a uniformly
/// random negative, ties counted 1/2. Throws UsageError when labels are
/// single-class (the metric is undefined).
double auroc(std::span<const double> scores, std::span<const int> labels);

/// label = 1 iff probability >= threshold.
std::vector<int> binarize(std::span<const double> probabilities, double threshold);

/// Threshold maximizing F1 against `labels`, scanned over the sorted
/// unique probabilities (first maximum wins).
double best_f1_threshold(std::span<const double> probabilities, std::span<const int> labels);

}  // namespace dcam
