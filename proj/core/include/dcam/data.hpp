#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcam {

/// The 14 pathology names, in the class-index order used throughout.
std::span<const std::string> canonical_pathologies();
bool is_canonical_pathology(std::string_view name);
int pathology_index(std::string_view name);  // -1 when unknown

struct LabelRecord {
  std::string image_id;
  std::string patient_id;
  std::set<std::string> findings;  // empty set encodes "No Finding"
};

struct LabelTable {
  std::vector<LabelRecord> rows;

  const LabelRecord* find(std::string_view image_id) const;
  std::vector<std::string> patients_in_first_seen_order() const;
};

/// Reads a ChestX-ray14-style label file: header
/// `Image Index,Finding Labels,Patient ID`, pipe-separated findings,
/// "No Finding" for the empty set. LF and CRLF both accepted. Unknown
/// finding names, duplicate image ids and a missing header raise
/// ParseError with the offending line number.
LabelTable parse_label_csv(const std::filesystem::path& path);
LabelTable parse_label_csv_text(std::string_view text, const std::string& source_name);

std::string label_csv_text(const LabelTable& table);
void write_label_csv(const LabelTable& table, const std::filesystem::path& path);

/// y = 1 iff `target` is among the image's findings.
std::vector<int> binary_labels(const LabelTable& table, std::string_view target);

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
};

enum class Split { Train, Validation, Test };
std::string_view split_name(Split s);

struct SplitAssignment {
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;

  Split split_of(std::string_view patient_id) const;  // UsageError when unknown
  std::size_t patient_count() const { return train.size() + validation.size() + test.size(); }
};

/// Shuffles patients by a seeded permutation, then assigns the first
/// floor(r_train*P) to train, the next floor(r_val*P) to validation, and
/// the remainder to test. Same patient, same split, always.
SplitAssignment patient_split(const LabelTable& table, const SplitRatios& ratios,
                              std::uint64_t seed);

/// splits.csv: header `Patient ID,Split`, split in {train,validation,test}.
std::string split_csv_text(const SplitAssignment& assignment);
void write_split_csv(const SplitAssignment& assignment, const std::filesystem::path& path);
SplitAssignment parse_split_csv(const std::filesystem::path& path);

}  // namespace dcam
