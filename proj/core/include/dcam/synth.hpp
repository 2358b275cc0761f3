#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcam/data.hpp"
#include "dcam/tensor.hpp"

namespace dcam {

/// Each class is present in an image independently with this probability.
inline constexpr double kMotifProbability = 0.3;

/// Recipe for a synthetic grayscale dataset. Every image is Gaussian noise
/// over a smooth zero-mean intensity gradient; each label class (when
/// present) adds one elliptical blob whose internal texture is a sinusoid
/// with a class-specific orientation and frequency, so classes are
/// distinguishable by texture alone. Identical seeds reproduce the dataset
/// bit for bit.
struct SyntheticSpec {
  int image_size = 64;
  int num_images = 200;
  std::vector<std::string> classes = {"Pneumonia"};
  double noise_sigma = 0.05;
  int blob_radius_min = 8;
  int blob_radius_max = 14;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Inclusive pixel box of one rendered motif. x is the column, y the row.
struct MotifRegion {
  std::string image_id;
  std::string class_name;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct SyntheticDataset {
  std::vector<Tensor> images;  // [1,S,S] doubles in [0,1], row-aligned with labels.rows
  LabelTable labels;
  std::vector<MotifRegion> regions;
};

std::string synthetic_image_id(int index);

/// The label draw alone: presence[image][class], i.i.d. per class.
std::vector<std::vector<int>> sample_label_matrix(const SyntheticSpec& spec);

/// Renders image `index` containing exactly the given class subset
/// (present[c] != 0 selects spec.classes[c]). The background depends only
/// on (seed, index), never on the labels, so suppressing a class changes
/// pixels only inside that motif's recorded box.
Tensor render_synthetic_image(const SyntheticSpec& spec, int index, std::span<const int> present,
                              std::vector<MotifRegion>* regions);

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes <id>.pgm files plus labels.csv and regions.csv into `dir`.
void write_synthetic_dataset(const SyntheticDataset& dataset, const std::filesystem::path& dir);

std::string regions_csv_text(std::span<const MotifRegion> regions);
std::vector<MotifRegion> parse_regions_csv(const std::filesystem::path& path);

}  // namespace dcam
