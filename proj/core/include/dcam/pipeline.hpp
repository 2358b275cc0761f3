#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dcam/data.hpp"
#include "dcam/image.hpp"
#include "dcam/train.hpp"

namespace dcam {

/// A dataset directory: labels.csv plus one PGM per row.
struct DatasetOnDisk {
  LabelTable labels;
  std::vector<Tensor> images;  // [1,H,W] in [0,1], row-aligned with labels.rows
};

DatasetOnDisk load_dataset(const std::filesystem::path& dir);

/// What the model is trained to predict. Pneumonia: one output for
/// target_class. MultiLabel: one output per entry of classes.
struct TaskSpec {
  Task task = Task::Pneumonia;
  std::string target_class = "Pneumonia";
  std::vector<std::string> classes;  // multi-label outputs

  std::vector<std::string> output_names() const;
};

/// Per-row target vectors, length = number of model outputs.
std::vector<std::vector<double>> make_targets(const LabelTable& labels, const TaskSpec& task);

struct PreparedSplits {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> test_ids;
  ChannelStats stats;  // computed on the training images, applied to all
};

/// Buckets images by patient split and normalizes every image with the
/// training split's channel statistics.
PreparedSplits prepare_splits(const DatasetOnDisk& dataset, const SplitAssignment& splits,
                              const TaskSpec& task);

}  // namespace dcam
