#include "dcam/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dcam/error.hpp"

namespace dcam {

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
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

}  // namespace

RaterMatrix parse_rater_csv_text(std::string_view text, const std::string& source_name) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "missing header");
  const std::vector<std::string> header = split_commas(strip_cr(line));
  if (header.size() < 3 || header[0] != "Image Index") {
    throw ParseError(source_name, 1,
                     "expected header 'Image Index,<rater1>,...,<raterN>' with at least 2 raters");
  }
  RaterMatrix m;
  m.rater_names.assign(header.begin() + 1, header.end());

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw ParseError(source_name, line_no,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    m.image_ids.push_back(fields[0]);
    std::vector<int> row;
    row.reserve(m.rater_names.size());
    for (std::size_t r = 1; r < fields.size(); ++r) {
      if (fields[r] == "0") {
        row.push_back(0);
      } else if (fields[r] == "1") {
        row.push_back(1);
      } else {
        throw ParseError(source_name, line_no, "rater entry must be 0 or 1, got '" + fields[r] + "'");
      }
    }
    m.labels.push_back(std::move(row));
  }
  if (m.labels.empty()) throw ParseError(source_name, line_no, "rater file has no data rows");
  return m;
}

RaterMatrix parse_rater_csv(const std::filesystem::path& path) {
  return parse_rater_csv_text(read_text_file(path), path.filename().string());
}

PredictionTable parse_prediction_csv_text(std::string_view text, const std::string& source_name) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "missing header");
  const std::vector<std::string> header = split_commas(strip_cr(line));
  if (header.size() < 2 || header[0] != "Image Index") {
    throw ParseError(source_name, 1, "expected header 'Image Index,<class1>,...,<classK>'");
  }
  PredictionTable t;
  t.class_names.assign(header.begin() + 1, header.end());

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw ParseError(source_name, line_no,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    t.image_ids.push_back(fields[0]);
    std::vector<double> row;
    row.reserve(t.class_names.size());
    for (std::size_t c = 1; c < fields.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (end == fields[c].c_str() || *end != '\0' || !(v >= 0.0 && v <= 1.0)) {
        throw ParseError(source_name, line_no,
                         "probability must lie in [0,1], got '" + fields[c] + "'");
      }
      row.push_back(v);
    }
    t.probabilities.push_back(std::move(row));
  }
  return t;
}

PredictionTable parse_prediction_csv(const std::filesystem::path& path) {
  return parse_prediction_csv_text(read_text_file(path), path.filename().string());
}

std::string prediction_csv_text(const PredictionTable& table) {
  std::ostringstream out;
  out << "Image Index";
  for (const std::string& name : table.class_names) out << "," << name;
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < table.image_ids.size(); ++i) {
    out << table.image_ids[i];
    for (double p : table.probabilities[i]) {
      std::snprintf(buf, sizeof(buf), "%.6f", p);
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

F1Report build_f1_report(const RaterMatrix& raters, int n_samples, std::uint64_t seed) {
  raters.validate();
  const std::int32_t n_images = static_cast<std::int32_t>(raters.num_images());

  F1Report report;
  for (std::size_t r = 0; r < raters.num_raters(); ++r) {
    const Statistic stat = [&raters, r](std::span<const std::int32_t> indices) {
      return multi_rater_f1(raters, indices).mean_f1[r];
    };
    RaterReportRow row;
    row.name = raters.rater_names[r];
    row.is_model = static_cast<int>(r) == raters.model_index;
    row.f1 = bootstrap_ci(stat, n_images, n_samples, seed);
    report.raters.push_back(std::move(row));
  }

  const Statistic radiologist_stat = [&raters](std::span<const std::int32_t> indices) {
    return multi_rater_f1(raters, indices).radiologist_average;
  };
  report.radiologist_average = bootstrap_ci(radiologist_stat, n_images, n_samples, seed);

  if (raters.model_index >= 0) {
    report.has_model = true;
    const int model = raters.model_index;
    const Statistic model_stat = [&raters, model](std::span<const std::int32_t> indices) {
      return multi_rater_f1(raters, indices).mean_f1[static_cast<std::size_t>(model)];
    };
    report.model = bootstrap_ci(model_stat, n_images, n_samples, seed);
    report.difference =
        paired_difference_ci(model_stat, radiologist_stat, n_images, n_samples, seed);
  }
  return report;
}

std::string format_f1_report(const F1Report& report) {
  std::ostringstream out;
  out << "Rater,F1,CI low,CI high\n";
  for (const RaterReportRow& row : report.raters) {
    if (row.is_model) continue;
    out << row.name << "," << format_fixed(row.f1.point_estimate, 3) << ","
        << format_fixed(row.f1.ci_low, 3) << "," << format_fixed(row.f1.ci_high, 3) << "\n";
  }
  out << "Radiologist Avg.," << format_fixed(report.radiologist_average.point_estimate, 3) << ","
      << format_fixed(report.radiologist_average.ci_low, 3) << ","
      << format_fixed(report.radiologist_average.ci_high, 3) << "\n";
  if (report.has_model) {
    std::string model_name = "Model";
    for (const RaterReportRow& row : report.raters) {
      if (row.is_model) model_name = row.name;
    }
    out << model_name << "," << format_fixed(report.model.point_estimate, 3) << ","
        << format_fixed(report.model.ci_low, 3) << "," << format_fixed(report.model.ci_high, 3)
        << "\n";
    out << "Difference (model - radiologist avg)," << format_fixed(report.difference.point_estimate, 3)
        << "," << format_fixed(report.difference.ci_low, 3) << ","
        << format_fixed(report.difference.ci_high, 3) << ","
        << (report.difference.significant ? "significant" : "not significant") << "\n";
  }
  return out.str();
}

std::string format_auroc_csv(std::span<const std::string> class_names,
                             std::span<const double> aurocs) {
  if (class_names.size() != aurocs.size()) {
    throw ShapeError("auroc table: " + std::to_string(class_names.size()) + " names vs " +
                     std::to_string(aurocs.size()) + " values");
  }
  std::ostringstream out;
  out << "Pathology,AUROC\n";
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    out << class_names[i] << "," << format_fixed(aurocs[i], 4) << "\n";
  }
  return out.str();
}

double mean_of(std::span<const double> values) {
  if (values.empty()) throw UsageError("mean of an empty set");
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

}  // namespace dcam
