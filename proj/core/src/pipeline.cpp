#include "dcam/pipeline.hpp"

#include "dcam/error.hpp"

namespace dcam {

DatasetOnDisk load_dataset(const std::filesystem::path& dir) {
  DatasetOnDisk dataset;
  dataset.labels = parse_label_csv(dir / "labels.csv");
  dataset.images.reserve(dataset.labels.rows.size());
  for (const LabelRecord& row : dataset.labels.rows) {
    GrayImage image = read_pgm(dir / row.image_id);
    dataset.images.emplace_back(Dims{1, image.height, image.width}, std::move(image.pixels));
  }
  return dataset;
}

std::vector<std::string> TaskSpec::output_names() const {
  if (task == Task::Pneumonia) return {target_class};
  return classes;
}

std::vector<std::vector<double>> make_targets(const LabelTable& labels, const TaskSpec& task) {
  const std::vector<std::string> outputs = task.output_names();
  if (outputs.empty()) throw ConfigError("task has no output classes");
  std::vector<std::vector<int>> per_class;
  per_class.reserve(outputs.size());
  for (const std::string& name : outputs) per_class.push_back(binary_labels(labels, name));

  std::vector<std::vector<double>> targets(labels.rows.size());
  for (std::size_t i = 0; i < labels.rows.size(); ++i) {
    std::vector<double>& row = targets[i];
    row.reserve(outputs.size());
    for (const std::vector<int>& labels_for_class : per_class) {
      row.push_back(static_cast<double>(labels_for_class[i]));
    }
  }
  return targets;
}

PreparedSplits prepare_splits(const DatasetOnDisk& dataset, const SplitAssignment& splits,
                              const TaskSpec& task) {
  if (dataset.images.size() != dataset.labels.rows.size()) {
    throw UsageError("dataset images and label rows disagree in count");
  }
  const std::vector<std::vector<double>> targets = make_targets(dataset.labels, task);

  std::vector<std::size_t> train_rows, val_rows, test_rows;
  for (std::size_t i = 0; i < dataset.labels.rows.size(); ++i) {
    switch (splits.split_of(dataset.labels.rows[i].patient_id)) {
      case Split::Train: train_rows.push_back(i); break;
      case Split::Validation: val_rows.push_back(i); break;
      case Split::Test: test_rows.push_back(i); break;
    }
  }
  if (train_rows.empty()) throw UsageError("training split has no images");

  std::vector<Tensor> train_images;
  train_images.reserve(train_rows.size());
  for (std::size_t i : train_rows) train_images.push_back(dataset.images[i]);

  PreparedSplits prepared;
  prepared.stats = compute_channel_stats(train_images);

  auto fill = [&](const std::vector<std::size_t>& rows, std::vector<Example>& examples,
                  std::vector<std::string>& ids) {
    examples.reserve(rows.size());
    ids.reserve(rows.size());
    for (std::size_t i : rows) {
      Example e;
      e.image = normalize(dataset.images[i], prepared.stats.mean, prepared.stats.stddev);
      e.targets = targets[i];
      examples.push_back(std::move(e));
      ids.push_back(dataset.labels.rows[i].image_id);
    }
  };
  fill(train_rows, prepared.train, prepared.train_ids);
  fill(val_rows, prepared.validation, prepared.validation_ids);
  fill(test_rows, prepared.test, prepared.test_ids);
  return prepared;
}

}  // namespace dcam
