#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcam/bootstrap.hpp"
#include "dcam/metrics.hpp"

namespace dcam {

/// Rater CSV: header `Image Index,<rater1>,...,<raterN>`, binary entries.
RaterMatrix parse_rater_csv(const std::filesystem::path& path);
RaterMatrix parse_rater_csv_text(std::string_view text, const std::string& source_name);

/// Prediction CSV: header `Image Index,<class1>,...,<classK>`,
/// probabilities in [0,1].
struct PredictionTable {
  std::vector<std::string> class_names;
  std::vector<std::string> image_ids;
  std::vector<std::vector<double>> probabilities;  // [image][class]
};

PredictionTable parse_prediction_csv(const std::filesystem::path& path);
PredictionTable parse_prediction_csv_text(std::string_view text, const std::string& source_name);
std::string prediction_csv_text(const PredictionTable& table);

struct RaterReportRow {
  std::string name;
  bool is_model = false;
  BootstrapResult f1;
};

struct F1Report {
  std::vector<RaterReportRow> raters;     // per-rater mean F1 with CI
  BootstrapResult radiologist_average;    // mean over the non-model raters
  bool has_model = false;
  BootstrapResult model;                  // flagged rater, when present
  BootstrapResult difference;             // model - radiologist average
};

/// Per-rater mean F1 with bootstrap CIs, the radiologist average with CI,
/// and (when a model column is flagged) the paired difference on the same
/// resamples.
F1Report build_f1_report(const RaterMatrix& raters, int n_samples, std::uint64_t seed);

/// Plain-text rendering, three decimals throughout.
std::string format_f1_report(const F1Report& report);

/// Per-class AUROC table: `Pathology,AUROC`, four decimals.
std::string format_auroc_csv(std::span<const std::string> class_names,
                             std::span<const double> aurocs);

double mean_of(std::span<const double> values);
std::string format_fixed(double value, int decimals);

}  // namespace dcam
