#include "dcam/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dcam/error.hpp"
#include "dcam/image.hpp"
#include "dcam/rng.hpp"

namespace dcam {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBackgroundBase = 0.3;
constexpr double kGradientRange = 0.3;   // per-axis slope magnitude bound
constexpr double kBlobAmplitude = 0.45;

struct MotifGeometry {
  double cx, cy;          // center (column, row)
  double a, b;            // semi-axes, a along the texture direction
  double cos_t, sin_t;    // class orientation
  double frequency;       // sinusoid along the major axis
  double phase;
  int x0, y0, x1, y1;     // inclusive bounding box
};

// Orientation and frequency are tied to the canonical pathology index so a
// class renders identically no matter which subset a dataset uses.
void class_texture(const std::string& class_name, double* angle, double* frequency) {
  const int idx = pathology_index(class_name);
  const int k = idx < 0 ? 0 : idx;
  *angle = kPi * static_cast<double>(k) / 14.0;
  const double wavelength = 4.0 + 2.0 * static_cast<double>(k % 5);
  *frequency = 2.0 * kPi / wavelength;
}

MotifGeometry sample_geometry(const SyntheticSpec& spec, int image_index, int class_index) {
  SplitMix64 rng(derive_seed(spec.seed, "synth.geom", static_cast<std::uint64_t>(image_index),
                             static_cast<std::uint64_t>(class_index)));
  MotifGeometry geo;
  double angle = 0.0;
  class_texture(spec.classes[static_cast<std::size_t>(class_index)], &angle, &geo.frequency);
  geo.cos_t = std::cos(angle);
  geo.sin_t = std::sin(angle);
  geo.a = static_cast<double>(rng.next_int(spec.blob_radius_min, spec.blob_radius_max));
  geo.b = std::max(2.0, geo.a * rng.next_uniform(0.55, 0.85));
  geo.phase = rng.next_uniform(0.0, 2.0 * kPi);

  const double ext_x = std::sqrt(geo.a * geo.a * geo.cos_t * geo.cos_t +
                                 geo.b * geo.b * geo.sin_t * geo.sin_t);
  const double ext_y = std::sqrt(geo.a * geo.a * geo.sin_t * geo.sin_t +
                                 geo.b * geo.b * geo.cos_t * geo.cos_t);
  const int mx = static_cast<int>(std::ceil(ext_x));
  const int my = static_cast<int>(std::ceil(ext_y));
  geo.cx = static_cast<double>(rng.next_int(mx, spec.image_size - 1 - mx));
  geo.cy = static_cast<double>(rng.next_int(my, spec.image_size - 1 - my));
  geo.x0 = static_cast<int>(geo.cx) - mx;
  geo.x1 = static_cast<int>(geo.cx) + mx;
  geo.y0 = static_cast<int>(geo.cy) - my;
  geo.y1 = static_cast<int>(geo.cy) + my;
  return geo;
}

void add_motif(std::vector<double>& pixels, int size, const MotifGeometry& geo) {
  for (int y = geo.y0; y <= geo.y1; ++y) {
    for (int x = geo.x0; x <= geo.x1; ++x) {
      const double dx = static_cast<double>(x) - geo.cx;
      const double dy = static_cast<double>(y) - geo.cy;
      const double u = geo.cos_t * dx + geo.sin_t * dy;
      const double v = -geo.sin_t * dx + geo.cos_t * dy;
      const double e = (u / geo.a) * (u / geo.a) + (v / geo.b) * (v / geo.b);
      if (e >= 1.0) continue;
      const double falloff = 1.0 - e;
      const double texture = 0.7 + 0.3 * std::sin(geo.frequency * u + geo.phase);
      pixels[static_cast<std::size_t>(y * size + x)] += kBlobAmplitude * falloff * texture;
    }
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (image_size < 8) throw ConfigError("synthetic image_size must be at least 8");
  if (num_images < 1) throw ConfigError("num_images must be positive");
  if (classes.empty()) throw ConfigError("synthetic classes must not be empty");
  for (const std::string& c : classes) {
    if (!is_canonical_pathology(c)) throw ConfigError("unknown pathology '" + c + "'");
  }
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
  if (blob_radius_min < 2 || blob_radius_max < blob_radius_min) {
    throw ConfigError("blob radius range invalid");
  }
  if (image_size < 2 * blob_radius_max + 3) {
    throw ConfigError("image_size " + std::to_string(image_size) +
                      " too small for blob radius " + std::to_string(blob_radius_max));
  }
}

std::string synthetic_image_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth_%05d.pgm", index);
  return buf;
}

std::vector<std::vector<int>> sample_label_matrix(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<std::vector<int>> labels(static_cast<std::size_t>(spec.num_images));
  for (int i = 0; i < spec.num_images; ++i) {
    SplitMix64 rng(derive_seed(spec.seed, "synth.label", static_cast<std::uint64_t>(i)));
    std::vector<int>& row = labels[static_cast<std::size_t>(i)];
    row.resize(spec.classes.size());
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
      row[c] = rng.next_bernoulli(kMotifProbability) ? 1 : 0;
    }
  }
  return labels;
}

Tensor render_synthetic_image(const SyntheticSpec& spec, int index, std::span<const int> present,
                              std::vector<MotifRegion>* regions) {
  spec.validate();
  if (present.size() != spec.classes.size()) {
    throw ShapeError("presence vector length " + std::to_string(present.size()) +
                     " does not match " + std::to_string(spec.classes.size()) + " classes");
  }
  const int size = spec.image_size;
  std::vector<double> pixels(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));

  // Background: fixed base plus a zero-mean linear gradient plus noise.
  // It depends only on (seed, index) so label changes never move it.
  SplitMix64 bg(derive_seed(spec.seed, "synth.bg", static_cast<std::uint64_t>(index)));
  const double gx = bg.next_uniform(-kGradientRange, kGradientRange);
  const double gy = bg.next_uniform(-kGradientRange, kGradientRange);
  const double denom = static_cast<double>(size - 1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double xn = static_cast<double>(x) / denom - 0.5;
      const double yn = static_cast<double>(y) / denom - 0.5;
      pixels[static_cast<std::size_t>(y * size + x)] =
          kBackgroundBase + gx * xn + gy * yn + spec.noise_sigma * bg.next_gaussian();
    }
  }

  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    if (!present[c]) continue;
    const MotifGeometry geo = sample_geometry(spec, index, static_cast<int>(c));
    add_motif(pixels, size, geo);
    if (regions) {
      regions->push_back(MotifRegion{synthetic_image_id(index), spec.classes[c], geo.x0, geo.y0,
                                     geo.x1, geo.y1});
    }
  }

  for (double& v : pixels) v = std::clamp(v, 0.0, 1.0);
  return Tensor(Dims{1, size, size}, std::move(pixels));
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::vector<std::vector<int>> labels = sample_label_matrix(spec);

  // Patients own 1 to 3 consecutive images.
  SplitMix64 patient_rng(derive_seed(spec.seed, "synth.patient"));
  std::vector<std::string> patient_of(static_cast<std::size_t>(spec.num_images));
  int patient = 0;
  int i = 0;
  while (i < spec.num_images) {
    ++patient;
    const int take = static_cast<int>(patient_rng.next_int(1, 3));
    for (int k = 0; k < take && i < spec.num_images; ++k, ++i) {
      patient_of[static_cast<std::size_t>(i)] = std::to_string(patient);
    }
  }

  SyntheticDataset dataset;
  dataset.images.reserve(static_cast<std::size_t>(spec.num_images));
  for (int idx = 0; idx < spec.num_images; ++idx) {
    const std::vector<int>& present = labels[static_cast<std::size_t>(idx)];
    dataset.images.push_back(render_synthetic_image(spec, idx, present, &dataset.regions));

    LabelRecord row;
    row.image_id = synthetic_image_id(idx);
    row.patient_id = patient_of[static_cast<std::size_t>(idx)];
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
      if (present[c]) row.findings.insert(spec.classes[c]);
    }
    dataset.labels.rows.push_back(std::move(row));
  }
  return dataset;
}

void write_synthetic_dataset(const SyntheticDataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    const Tensor& image = dataset.images[i];
    write_pgm(dir / dataset.labels.rows[i].image_id, image.values(),
              static_cast<int>(image.dim(1)), static_cast<int>(image.dim(2)));
  }
  write_label_csv(dataset.labels, dir / "labels.csv");
  std::ofstream out(dir / "regions.csv", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write regions.csv in " + dir.string());
  out << regions_csv_text(dataset.regions);
}

std::string regions_csv_text(std::span<const MotifRegion> regions) {
  std::ostringstream out;
  out << "Image Index,Finding Label,X0,Y0,X1,Y1\n";
  for (const MotifRegion& r : regions) {
    out << r.image_id << "," << r.class_name << "," << r.x0 << "," << r.y0 << "," << r.x1 << ","
        << r.y1 << "\n";
  }
  return out.str();
}

std::vector<MotifRegion> parse_regions_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  const std::string source = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "Image Index,Finding Label,X0,Y0,X1,Y1") {
    throw ParseError(source, 1, "bad header '" + line + "'");
  }
  std::vector<MotifRegion> regions;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    MotifRegion r;
    std::istringstream row(line);
    std::string field;
    try {
      std::getline(row, r.image_id, ',');
      std::getline(row, r.class_name, ',');
      std::getline(row, field, ',');
      r.x0 = std::stoi(field);
      std::getline(row, field, ',');
      r.y0 = std::stoi(field);
      std::getline(row, field, ',');
      r.x1 = std::stoi(field);
      std::getline(row, field, ',');
      r.y1 = std::stoi(field);
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "malformed region row '" + line + "'");
    }
    regions.push_back(std::move(r));
  }
  return regions;
}

}  // namespace dcam
