#include "collabrep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace collabrep {

LabeledDataset::LabeledDataset(Eigen::MatrixXd features, std::vector<int> labels,
                               std::vector<std::string> class_names)
    : features_(std::move(features)), labels_(std::move(labels)), class_names_(std::move(class_names)) {
  if (static_cast<Index>(labels_.size()) != features_.cols()) {
    throw InvalidArgument("dataset: " + std::to_string(labels_.size()) + " labels for " +
                          std::to_string(features_.cols()) + " samples");
  }
  if (features_.cols() == 0) throw InvalidArgument("dataset: no samples");
  if (features_.rows() == 0) throw InvalidArgument("dataset: feature dimension must be >= 1");

  int num_classes = 0;
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    if (labels_[j] < 1) {
      throw InvalidArgument("dataset: label " + std::to_string(labels_[j]) + " at column " + std::to_string(j) +
                            " is outside 1..L");
    }
    num_classes = std::max(num_classes, labels_[j]);
  }
  class_index_.assign(static_cast<std::size_t>(num_classes), {});
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    class_index_[static_cast<std::size_t>(labels_[j] - 1)].push_back(static_cast<Index>(j));
  }
  for (int c = 0; c < num_classes; ++c) {
    if (class_index_[static_cast<std::size_t>(c)].empty()) {
      throw InvalidArgument("dataset: class " + std::to_string(c + 1) + " has no samples");
    }
  }
  for (Index j = 0; j < features_.cols(); ++j) {
    for (Index r = 0; r < features_.rows(); ++r) {
      if (!std::isfinite(features_(r, j))) {
        throw InvalidArgument("dataset: non-finite entry at row " + std::to_string(r) + ", column " +
                              std::to_string(j));
      }
    }
  }

  if (class_names_.empty()) {
    for (int c = 1; c <= num_classes; ++c) class_names_.push_back(std::to_string(c));
  } else if (static_cast<int>(class_names_.size()) != num_classes) {
    throw InvalidArgument("dataset: " + std::to_string(class_names_.size()) + " class names for " +
                          std::to_string(num_classes) + " classes");
  }
}

const std::vector<Index>& LabeledDataset::class_columns(int label) const {
  if (label < 1 || label > num_classes()) {
    throw InvalidArgument("dataset: class " + std::to_string(label) + " outside 1.." +
                          std::to_string(num_classes()));
  }
  return class_index_[static_cast<std::size_t>(label - 1)];
}

Index LabeledDataset::min_class_size() const {
  Index smallest = std::numeric_limits<Index>::max();
  for (const auto& cols : class_index_) smallest = std::min(smallest, static_cast<Index>(cols.size()));
  return smallest;
}

Eigen::MatrixXd LabeledDataset::class_block(int label) const {
  const auto& cols = class_columns(label);
  Eigen::MatrixXd block(dim(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) block.col(static_cast<Index>(k)) = features_.col(cols[k]);
  return block;
}

LabeledDataset LabeledDataset::select(std::span<const Index> columns) const {
  Eigen::MatrixXd sub(dim(), static_cast<Index>(columns.size()));
  std::vector<int> sub_labels;
  sub_labels.reserve(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const Index j = columns[k];
    if (j < 0 || j >= size()) throw InvalidArgument("dataset: column " + std::to_string(j) + " out of range");
    sub.col(static_cast<Index>(k)) = features_.col(j);
    sub_labels.push_back(labels_[static_cast<std::size_t>(j)]);
  }
  LabeledDataset out(std::move(sub), std::move(sub_labels), class_names_);
  if (out.num_classes() != num_classes()) {
    throw InvalidArgument("dataset: selection drops class " + std::to_string(num_classes()));
  }
  return out;
}

void SynthSpec::validate() const {
  if (num_classes < 2) throw InvalidArgument("synth: num_classes must be >= 2");
  if (dim < 1) throw InvalidArgument("synth: dim must be >= 1");
  if (samples_per_class < 1) throw InvalidArgument("synth: samples_per_class must be >= 1");
  if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) {
    throw InvalidArgument("synth: class_separation must be a finite value >= 0");
  }
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset, Index train_per_class,
                                                std::uint64_t seed) {
  if (train_per_class < 1 || train_per_class >= dataset.min_class_size()) {
    throw InvalidArgument("split: train_per_class must satisfy 1 <= k < min class size (" +
                          std::to_string(dataset.min_class_size()) + "), got " + std::to_string(train_per_class));
  }
  std::mt19937_64 rng(seed);
  std::vector<char> in_train(static_cast<std::size_t>(dataset.size()), 0);
  for (int c = 1; c <= dataset.num_classes(); ++c) {
    std::vector<Index> cols = dataset.class_columns(c);
    std::shuffle(cols.begin(), cols.end(), rng);
    for (Index k = 0; k < train_per_class; ++k) in_train[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])] = 1;
  }
  std::vector<Index> train_cols;
  std::vector<Index> test_cols;
  for (Index j = 0; j < dataset.size(); ++j) {
    (in_train[static_cast<std::size_t>(j)] ? train_cols : test_cols).push_back(j);
  }
  return {dataset.select(train_cols), dataset.select(test_cols)};
}

LabeledDataset synth_gaussian(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto classes = static_cast<Index>(spec.num_classes);

  // Random directions, rescaled so the closest pair of means sits exactly
  // class_separation apart.
  Eigen::MatrixXd means(spec.dim, classes);
  for (Index c = 0; c < classes; ++c) {
    for (Index r = 0; r < spec.dim; ++r) means(r, c) = normal(rng);
  }
  double closest = std::numeric_limits<double>::infinity();
  for (Index a = 0; a < classes; ++a) {
    for (Index b = a + 1; b < classes; ++b) closest = std::min(closest, (means.col(a) - means.col(b)).norm());
  }
  if (spec.class_separation == 0.0 || !(closest > 0.0)) {
    means.setZero();
  } else {
    means *= spec.class_separation / closest;
  }

  const Index n = classes * spec.samples_per_class;
  Eigen::MatrixXd features(spec.dim, n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index c = 0; c < classes; ++c) {
    for (Index s = 0; s < spec.samples_per_class; ++s) {
      const Index j = c * spec.samples_per_class + s;
      for (Index r = 0; r < spec.dim; ++r) features(r, j) = means(r, c) + normal(rng);
      labels[static_cast<std::size_t>(j)] = static_cast<int>(c + 1);
    }
  }
  return LabeledDataset(std::move(features), std::move(labels));
}

LabeledDataset normalize_samples(const LabeledDataset& dataset) {
  Eigen::MatrixXd features = dataset.features();
  for (Index j = 0; j < features.cols(); ++j) {
    const double norm = features.col(j).norm();
    if (norm == 0.0) throw InvalidArgument("normalize: sample " + std::to_string(j) + " has zero norm");
    features.col(j) /= norm;
  }
  return LabeledDataset(std::move(features), dataset.labels(), dataset.class_names());
}

}  // namespace collabrep
