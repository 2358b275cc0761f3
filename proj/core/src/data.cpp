#include "dcam/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dcam/error.hpp"
#include "dcam/rng.hpp"

namespace dcam {

namespace {

const std::array<std::string, 14> kPathologies = {
    "Atelectasis", "Cardiomegaly", "Consolidation", "Edema",  "Effusion",
    "Emphysema",   "Fibrosis",     "Hernia",        "Infiltration", "Mass",
    "Nodule",      "Pleural Thickening", "Pneumonia", "Pneumothorax"};

constexpr std::string_view kLabelHeader = "Image Index,Finding Labels,Patient ID";
constexpr std::string_view kSplitHeader = "Patient ID,Split";
constexpr std::string_view kNoFinding = "No Finding";

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out << text;
  if (!out) throw IoError("failed writing file: " + path.string());
}

}  // namespace

std::span<const std::string> canonical_pathologies() {
  return std::span<const std::string>(kPathologies.data(), kPathologies.size());
}

bool is_canonical_pathology(std::string_view name) { return pathology_index(name) >= 0; }

int pathology_index(std::string_view name) {
  for (std::size_t i = 0; i < kPathologies.size(); ++i) {
    if (kPathologies[i] == name) return static_cast<int>(i);
  }
  return -1;
}

const LabelRecord* LabelTable::find(std::string_view image_id) const {
  for (const LabelRecord& row : rows) {
    if (row.image_id == image_id) return &row;
  }
  return nullptr;
}

std::vector<std::string> LabelTable::patients_in_first_seen_order() const {
  std::vector<std::string> patients;
  std::set<std::string> seen;
  for (const LabelRecord& row : rows) {
    if (seen.insert(row.patient_id).second) patients.push_back(row.patient_id);
  }
  return patients;
}

LabelTable parse_label_csv_text(std::string_view text, const std::string& source_name) {
  std::istringstream in{std::string(text)};
  std::string line;
  long line_no = 0;

  if (!std::getline(in, line)) {
    throw ParseError(source_name, 1, "missing header '" + std::string(kLabelHeader) + "'");
  }
  line_no = 1;
  if (strip_cr(line) != kLabelHeader) {
    throw ParseError(source_name, 1,
                     "bad header: expected '" + std::string(kLabelHeader) + "', got '" +
                         strip_cr(line) + "'");
  }

  LabelTable table;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_on(line, ',');
    if (fields.size() != 3) {
      throw ParseError(source_name, line_no,
                       "expected 3 comma-separated fields, got " + std::to_string(fields.size()));
    }
    LabelRecord row;
    row.image_id = fields[0];
    row.patient_id = fields[2];
    if (row.image_id.empty()) throw ParseError(source_name, line_no, "empty image id");
    if (row.patient_id.empty()) throw ParseError(source_name, line_no, "empty patient id");
    if (!seen_ids.insert(row.image_id).second) {
      throw ParseError(source_name, line_no, "duplicate image id '" + row.image_id + "'");
    }
    if (fields[1] != kNoFinding) {
      for (const std::string& finding : split_on(fields[1], '|')) {
        if (!is_canonical_pathology(finding)) {
          throw ParseError(source_name, line_no, "unknown finding label '" + finding + "'");
        }
        row.findings.insert(finding);
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

LabelTable parse_label_csv(const std::filesystem::path& path) {
  return parse_label_csv_text(read_text_file(path), path.filename().string());
}

std::string label_csv_text(const LabelTable& table) {
  std::ostringstream out;
  out << kLabelHeader << "\n";
  for (const LabelRecord& row : table.rows) {
    out << row.image_id << ",";
    if (row.findings.empty()) {
      out << kNoFinding;
    } else {
      bool first = true;
      for (const std::string& finding : row.findings) {
        if (!first) out << "|";
        out << finding;
        first = false;
      }
    }
    out << "," << row.patient_id << "\n";
  }
  return out.str();
}

void write_label_csv(const LabelTable& table, const std::filesystem::path& path) {
  write_text_file(path, label_csv_text(table));
}

std::vector<int> binary_labels(const LabelTable& table, std::string_view target) {
  if (!is_canonical_pathology(target)) {
    throw UsageError("unknown pathology '" + std::string(target) + "'");
  }
  std::vector<int> labels;
  labels.reserve(table.rows.size());
  const std::string key(target);
  for (const LabelRecord& row : table.rows) {
    labels.push_back(row.findings.count(key) ? 1 : 0);
  }
  return labels;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "";
}

Split SplitAssignment::split_of(std::string_view patient_id) const {
  const std::string key(patient_id);
  if (train.count(key)) return Split::Train;
  if (validation.count(key)) return Split::Validation;
  if (test.count(key)) return Split::Test;
  throw UsageError("patient '" + key + "' is not in any split");
}

SplitAssignment patient_split(const LabelTable& table, const SplitRatios& ratios,
                              std::uint64_t seed) {
  if (ratios.train <= 0.0 || ratios.validation <= 0.0 || ratios.test <= 0.0) {
    throw UsageError("split ratios must all be positive");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw UsageError("split ratios must sum to 1");
  }
  std::vector<std::string> patients = table.patients_in_first_seen_order();
  if (patients.size() < 3) {
    throw UsageError("patient split needs at least 3 patients, got " +
                     std::to_string(patients.size()));
  }

  SplitMix64 rng(derive_seed(seed, "split"));
  shuffle(patients, rng);

  const std::size_t total = patients.size();
  const std::size_t n_train =
      static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(total)));
  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(ratios.validation * static_cast<double>(total)));

  SplitAssignment out;
  for (std::size_t i = 0; i < total; ++i) {
    if (i < n_train) {
      out.train.insert(patients[i]);
    } else if (i < n_train + n_val) {
      out.validation.insert(patients[i]);
    } else {
      out.test.insert(patients[i]);
    }
  }
  return out;
}

std::string split_csv_text(const SplitAssignment& assignment) {
  // Rows sorted by patient id for stable output.
  std::map<std::string, Split> by_patient;
  for (const std::string& p : assignment.train) by_patient.emplace(p, Split::Train);
  for (const std::string& p : assignment.validation) by_patient.emplace(p, Split::Validation);
  for (const std::string& p : assignment.test) by_patient.emplace(p, Split::Test);
  std::ostringstream out;
  out << kSplitHeader << "\n";
  for (const auto& [patient, split] : by_patient) {
    out << patient << "," << split_name(split) << "\n";
  }
  return out.str();
}

void write_split_csv(const SplitAssignment& assignment, const std::filesystem::path& path) {
  write_text_file(path, split_csv_text(assignment));
}

SplitAssignment parse_split_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const std::string source = path.filename().string();
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kSplitHeader) {
    throw ParseError(source, 1, "bad header: expected '" + std::string(kSplitHeader) + "'");
  }
  SplitAssignment out;
  long line_no = 1;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_on(line, ',');
    if (fields.size() != 2) {
      throw ParseError(source, line_no, "expected 'patient,split', got '" + line + "'");
    }
    if (!seen.insert(fields[0]).second) {
      throw ParseError(source, line_no, "duplicate patient id '" + fields[0] + "'");
    }
    if (fields[1] == "train") {
      out.train.insert(fields[0]);
    } else if (fields[1] == "validation") {
      out.validation.insert(fields[0]);
    } else if (fields[1] == "test") {
      out.test.insert(fields[0]);
    } else {
      throw ParseError(source, line_no, "unknown split '" + fields[1] + "'");
    }
  }
  return out;
}

}  // namespace dcam
