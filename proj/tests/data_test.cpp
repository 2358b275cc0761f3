#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "dcam/data.hpp"
#include "dcam/error.hpp"
#include "dcam/image.hpp"
#include "dcam/metrics.hpp"
#include "dcam/synth.hpp"
#include "test_util.hpp"

using namespace dcam;
using dcam::testing::TempDir;

TEST(LabelCsv, ParsesChestXrayStyleRows) {
  const std::string text =
      "Image Index,Finding Labels,Patient ID\n"
      "00000001_000.png,Cardiomegaly|Emphysema,1\n"
      "img.png,No Finding,7\n";
  const LabelTable table = parse_label_csv_text(text, "labels.csv");
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].image_id, "00000001_000.png");
  EXPECT_EQ(table.rows[0].patient_id, "1");
  EXPECT_EQ(table.rows[0].findings, (std::set<std::string>{"Cardiomegaly", "Emphysema"}));
  EXPECT_TRUE(table.rows[1].findings.empty());
}

TEST(LabelCsv, AcceptsCrlf) {
  const std::string text =
      "Image Index,Finding Labels,Patient ID\r\n"
      "a.png,Pneumonia,3\r\n";
  const LabelTable table = parse_label_csv_text(text, "labels.csv");
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0].findings.count("Pneumonia"), 1u);
}

TEST(LabelCsv, UnknownFindingNamesLineAndToken) {
  const std::string text =
      "Image Index,Finding Labels,Patient ID\n"
      "a.png,Pneumonia,1\n"
      "b.png,Pneumonitis,2\n";
  try {
    parse_label_csv_text(text, "labels.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("Pneumonitis"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("labels.csv:3"), std::string::npos);
  }
}

TEST(LabelCsv, MissingHeaderAndDuplicateIdAreDistinct) {
  EXPECT_THROW(parse_label_csv_text("a.png,Pneumonia,1\n", "x.csv"), ParseError);
  const std::string dup =
      "Image Index,Finding Labels,Patient ID\n"
      "a.png,Pneumonia,1\n"
      "a.png,No Finding,2\n";
  try {
    parse_label_csv_text(dup, "x.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("duplicate image id"), std::string::npos);
  }
}

TEST(LabelCsv, RoundTripIdentity) {
  SplitMix64 rng(51);
  const auto names = canonical_pathologies();
  LabelTable table;
  for (int i = 0; i < 40; ++i) {
    LabelRecord row;
    row.image_id = "img_" + std::to_string(i) + ".png";
    row.patient_id = std::to_string(rng.next_int(1, 12));
    for (const std::string& name : names) {
      if (rng.next_bernoulli(0.2)) row.findings.insert(name);
    }
    table.rows.push_back(std::move(row));
  }
  const LabelTable parsed = parse_label_csv_text(label_csv_text(table), "roundtrip");
  ASSERT_EQ(parsed.rows.size(), table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    EXPECT_EQ(parsed.rows[i].image_id, table.rows[i].image_id);
    EXPECT_EQ(parsed.rows[i].patient_id, table.rows[i].patient_id);
    EXPECT_EQ(parsed.rows[i].findings, table.rows[i].findings);
  }
}

TEST(BinaryLabels, TargetMembership) {
  LabelTable table;
  table.rows.push_back({"a", "1", {"Pneumonia", "Edema"}});
  table.rows.push_back({"b", "1", {}});
  table.rows.push_back({"c", "2", {"Edema"}});
  const std::vector<int> labels = binary_labels(table, "Pneumonia");
  EXPECT_EQ(labels, (std::vector<int>{1, 0, 0}));
  EXPECT_THROW(binary_labels(table, "NotAClass"), UsageError);
}

namespace {

LabelTable table_with_patients(int patients, int images_per_patient) {
  LabelTable table;
  for (int p = 0; p < patients; ++p) {
    for (int i = 0; i < images_per_patient; ++i) {
      LabelRecord row;
      row.image_id = "p" + std::to_string(p) + "_" + std::to_string(i) + ".png";
      row.patient_id = std::to_string(p);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace

TEST(PatientSplit, FloorRuleSizes) {
  const LabelTable table = table_with_patients(10, 2);
  const SplitAssignment split = patient_split(table, SplitRatios{0.7, 0.1, 0.2}, 3);
  EXPECT_EQ(split.train.size(), 7u);
  EXPECT_EQ(split.validation.size(), 1u);
  EXPECT_EQ(split.test.size(), 2u);
}

TEST(PatientSplit, DisjointCoverProperty) {
  SplitMix64 rng(52);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int patients = static_cast<int>(rng.next_int(3, 40));
    const LabelTable table = table_with_patients(patients, 1 + static_cast<int>(seed % 3));
    const SplitAssignment split = patient_split(table, SplitRatios{0.7, 0.1, 0.2}, seed);

    const std::size_t total = static_cast<std::size_t>(patients);
    EXPECT_EQ(split.patient_count(), total);
    const std::size_t expected_train = static_cast<std::size_t>(std::floor(0.7 * patients));
    const std::size_t expected_val = static_cast<std::size_t>(std::floor(0.1 * patients));
    EXPECT_EQ(split.train.size(), expected_train);
    EXPECT_EQ(split.validation.size(), expected_val);
    EXPECT_EQ(split.test.size(), total - expected_train - expected_val);

    for (const std::string& p : split.train) {
      EXPECT_EQ(split.validation.count(p), 0u);
      EXPECT_EQ(split.test.count(p), 0u);
    }
    for (const std::string& p : split.validation) EXPECT_EQ(split.test.count(p), 0u);

    // Every image lands in exactly one split, same patient same split.
    for (const LabelRecord& row : table.rows) {
      (void)split.split_of(row.patient_id);
    }
  }
}

TEST(PatientSplit, DeterministicPerSeedAndErrors) {
  const LabelTable table = table_with_patients(20, 1);
  const SplitAssignment a = patient_split(table, SplitRatios{}, 9);
  const SplitAssignment b = patient_split(table, SplitRatios{}, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);

  EXPECT_THROW(patient_split(table_with_patients(2, 1), SplitRatios{}, 1), UsageError);
  EXPECT_THROW(patient_split(table, SplitRatios{0.5, 0.2, 0.2}, 1), UsageError);
}

TEST(SplitCsv, RoundTrip) {
  const LabelTable table = table_with_patients(9, 1);
  const SplitAssignment split = patient_split(table, SplitRatios{}, 4);
  TempDir dir("split");
  write_split_csv(split, dir.path() / "splits.csv");
  const SplitAssignment parsed = parse_split_csv(dir.path() / "splits.csv");
  EXPECT_EQ(parsed.train, split.train);
  EXPECT_EQ(parsed.validation, split.validation);
  EXPECT_EQ(parsed.test, split.test);
}

TEST(Resize, IdentityBitExact) {
  SplitMix64 rng(53);
  Tensor image = dcam::testing::random_tensor(Dims{2, 5, 5}, rng, false, 0.0, 1.0);
  Tensor same = resize_image(image, 5);
  for (std::int64_t i = 0; i < image.size(); ++i) {
    EXPECT_EQ(same.values()[i], image.values()[i]);
  }
}

TEST(Resize, CenterSampleIsMean) {
  Tensor image(Dims{1, 2, 2}, {1, 2, 3, 4});
  Tensor out = resize_image(image, 1);
  EXPECT_DOUBLE_EQ(out.item(), 2.5);
}

TEST(Resize, ConstantStaysConstant) {
  Tensor image = Tensor::full(Dims{1, 3, 3}, 0.6);
  for (int target : {1, 2, 5, 9}) {
    Tensor out = resize_image(image, target);
    for (double v : out.values()) EXPECT_NEAR(v, 0.6, 1e-12);
  }
}

TEST(Resize, BilinearConvexityBounds) {
  SplitMix64 rng(54);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = static_cast<int>(rng.next_int(1, 9));
    const int w = static_cast<int>(rng.next_int(1, 9));
    Tensor image = dcam::testing::random_tensor(Dims{1, h, w}, rng, false, -1.0, 1.0);
    const auto [lo, hi] =
        std::minmax_element(image.values().begin(), image.values().end());
    const int target = static_cast<int>(rng.next_int(1, 12));
    Tensor out = resize_image(image, target);
    for (double v : out.values()) {
      EXPECT_GE(v, *lo - 1e-12);
      EXPECT_LE(v, *hi + 1e-12);
    }
  }
}

TEST(Normalize, Examples) {
  Tensor image(Dims{1, 2, 2}, {1, 2, 3, 4});
  const std::vector<double> zero{0.0};
  const std::vector<double> one{1.0};
  Tensor same = normalize(image, zero, one);
  for (std::int64_t i = 0; i < image.size(); ++i) {
    EXPECT_DOUBLE_EQ(same.values()[i], image.values()[i]);
  }

  const std::vector<double> mean{2.5};
  Tensor centered = normalize(Tensor::full(Dims{1, 3, 3}, 2.5), mean, one);
  for (double v : centered.values()) EXPECT_DOUBLE_EQ(v, 0.0);

  EXPECT_THROW(normalize(image, zero, std::vector<double>{0.0}), UsageError);
}

TEST(Normalize, SelfStatsGiveZeroMeanUnitStd) {
  SplitMix64 rng(55);
  std::vector<Tensor> images;
  for (int i = 0; i < 12; ++i) {
    images.push_back(dcam::testing::random_tensor(Dims{1, 6, 6}, rng, false, 0.0, 1.0));
  }
  const ChannelStats stats = compute_channel_stats(images);
  normalize_images(images, stats.mean, stats.stddev);
  double sum = 0.0, sum_sq = 0.0;
  std::int64_t count = 0;
  for (const Tensor& image : images) {
    for (double v : image.values()) {
      sum += v;
      sum_sq += v * v;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sum_sq / static_cast<double>(count) - mean * mean;
  EXPECT_LT(std::abs(mean), 1e-9);
  EXPECT_NEAR(std::sqrt(var), 1.0, 1e-9);
}

namespace {

SyntheticSpec test_spec() {
  SyntheticSpec spec;
  spec.image_size = 48;
  spec.num_images = 60;
  spec.classes = {"Pneumonia", "Edema"};
  spec.noise_sigma = 0.05;
  spec.blob_radius_min = 6;
  spec.blob_radius_max = 10;
  spec.seed = 77;
  return spec;
}

}  // namespace

TEST(Synthetic, DeterministicPerSeed) {
  const SyntheticSpec spec = test_spec();
  const SyntheticDataset a = generate_synthetic(spec);
  const SyntheticDataset b = generate_synthetic(spec);
  ASSERT_EQ(a.images.size(), b.images.size());
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    const auto va = a.images[i].values();
    const auto vb = b.images[i].values();
    for (std::size_t j = 0; j < va.size(); ++j) EXPECT_EQ(va[j], vb[j]);
  }
  ASSERT_EQ(a.regions.size(), b.regions.size());
  EXPECT_EQ(label_csv_text(a.labels), label_csv_text(b.labels));
}

TEST(Synthetic, MotifDifferenceConfinedToBox) {
  const SyntheticSpec spec = test_spec();
  for (int index : {0, 3, 11}) {
    std::vector<MotifRegion> regions;
    const std::vector<int> with{1, 0};
    const std::vector<int> without{0, 0};
    const Tensor positive = render_synthetic_image(spec, index, with, &regions);
    const Tensor background = render_synthetic_image(spec, index, without, nullptr);
    ASSERT_EQ(regions.size(), 1u);
    const MotifRegion& box = regions[0];

    double max_inside = 0.0;
    for (int y = 0; y < spec.image_size; ++y) {
      for (int x = 0; x < spec.image_size; ++x) {
        const std::size_t i = static_cast<std::size_t>(y * spec.image_size + x);
        const double diff = std::abs(positive.values()[i] - background.values()[i]);
        if (box.contains(x, y)) {
          max_inside = std::max(max_inside, diff);
        } else {
          EXPECT_EQ(diff, 0.0) << "difference outside the recorded box at " << x << "," << y;
        }
      }
    }
    EXPECT_GT(max_inside, 0.05);
  }
}

TEST(Synthetic, LabelPrevalenceNearPoint3) {
  SyntheticSpec spec = test_spec();
  spec.num_images = 10000;
  const auto labels = sample_label_matrix(spec);
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    std::int64_t count = 0;
    for (const auto& row : labels) count += row[c];
    const double prevalence = static_cast<double>(count) / static_cast<double>(spec.num_images);
    EXPECT_NEAR(prevalence, 0.3, 0.02);
  }
}

TEST(Synthetic, PatientsOwnOneToThreeImages) {
  const SyntheticSpec spec = test_spec();
  const SyntheticDataset dataset = generate_synthetic(spec);
  std::map<std::string, int> images_per_patient;
  for (const LabelRecord& row : dataset.labels.rows) images_per_patient[row.patient_id]++;
  EXPECT_GE(images_per_patient.size(), 20u);
  for (const auto& [patient, count] : images_per_patient) {
    EXPECT_GE(count, 1);
    EXPECT_LE(count, 3);
  }
}

TEST(Synthetic, PixelSumThresholdSeparatesSingleClass) {
  SyntheticSpec spec;
  spec.image_size = 48;
  spec.num_images = 400;
  spec.classes = {"Pneumonia"};
  spec.blob_radius_min = 6;
  spec.blob_radius_max = 10;
  spec.seed = 99;
  const SyntheticDataset dataset = generate_synthetic(spec);
  const std::vector<int> labels = binary_labels(dataset.labels, "Pneumonia");

  std::vector<double> sums;
  sums.reserve(dataset.images.size());
  for (const Tensor& image : dataset.images) {
    double s = 0.0;
    for (double v : image.values()) s += v;
    sums.push_back(s);
  }
  // Best single-threshold accuracy over the observed sums.
  std::vector<double> candidates = sums;
  std::sort(candidates.begin(), candidates.end());
  double best_accuracy = 0.0;
  for (double threshold : candidates) {
    int correct = 0;
    for (std::size_t i = 0; i < sums.size(); ++i) {
      const int predicted = sums[i] >= threshold ? 1 : 0;
      correct += predicted == labels[i];
    }
    best_accuracy = std::max(best_accuracy,
                             static_cast<double>(correct) / static_cast<double>(sums.size()));
  }
  EXPECT_GT(best_accuracy, 0.9);
}

TEST(Pgm, RoundTripWithinQuantization) {
  SplitMix64 rng(56);
  TempDir dir("pgm");
  const int h = 9, w = 7;
  std::vector<double> pixels(static_cast<std::size_t>(h * w));
  for (double& v : pixels) v = rng.next_double();
  write_pgm(dir.path() / "x.pgm", pixels, h, w);
  const GrayImage back = read_pgm(dir.path() / "x.pgm");
  ASSERT_EQ(back.height, h);
  ASSERT_EQ(back.width, w);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    EXPECT_NEAR(back.pixels[i], pixels[i], 0.5 / 255.0 + 1e-12);
  }
}

TEST(Regions, CsvRoundTrip) {
  std::vector<MotifRegion> regions;
  regions.push_back({"a.pgm", "Pneumonia", 3, 4, 10, 12});
  regions.push_back({"b.pgm", "Edema", 0, 0, 5, 5});
  TempDir dir("regions");
  {
    std::ofstream out(dir.path() / "regions.csv");
    out << regions_csv_text(regions);
  }
  const std::vector<MotifRegion> parsed = parse_regions_csv(dir.path() / "regions.csv");
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[0].image_id, "a.pgm");
  EXPECT_EQ(parsed[0].class_name, "Pneumonia");
  EXPECT_EQ(parsed[1].x1, 5);
}

TEST(Dataset, WriteAndLoadBack) {
  SyntheticSpec spec;
  spec.image_size = 32;
  spec.num_images = 8;
  spec.classes = {"Pneumonia"};
  spec.blob_radius_min = 4;
  spec.blob_radius_max = 7;
  spec.seed = 5;
  const SyntheticDataset dataset = generate_synthetic(spec);
  TempDir dir("dataset");
  write_synthetic_dataset(dataset, dir.path());

  const LabelTable labels = parse_label_csv(dir.path() / "labels.csv");
  ASSERT_EQ(labels.rows.size(), 8u);
  const GrayImage image = read_pgm(dir.path() / labels.rows[0].image_id);
  EXPECT_EQ(image.height, 32);
  EXPECT_EQ(image.width, 32);
}
