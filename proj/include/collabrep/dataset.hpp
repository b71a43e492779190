#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "collabrep/errors.hpp"

namespace collabrep {

using Index = Eigen::Index;

// Samples are columns of a d x n feature matrix. Labels are dense class ids
// in 1..L; class i owns the ordered column list class_columns(i), which
// defines the block X_i.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  // Throws InvalidArgument unless every label is in 1..L, every class has at
  // least one column and all entries are finite. L is the largest label.
  // class_names, when given, holds the original label text for ids 1..L.
  LabeledDataset(Eigen::MatrixXd features, std::vector<int> labels,
                 std::vector<std::string> class_names = {});

  const Eigen::MatrixXd& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  Index dim() const noexcept { return features_.rows(); }
  Index size() const noexcept { return features_.cols(); }
  int num_classes() const noexcept { return static_cast<int>(class_index_.size()); }

  const std::vector<Index>& class_columns(int label) const;
  Index class_size(int label) const { return static_cast<Index>(class_columns(label).size()); }
  Index min_class_size() const;

  // X_i gathered into a contiguous d x n_i matrix.
  Eigen::MatrixXd class_block(int label) const;

  // Sub-dataset over the given columns (in the given order). Keeps L and the
  // class names, so every class must still be represented.
  LabeledDataset select(std::span<const Index> columns) const;

 private:
  Eigen::MatrixXd features_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
  std::vector<std::vector<Index>> class_index_;
};

struct SynthSpec {
  int num_classes = 2;
  Index dim = 1;
  Index samples_per_class = 1;
  // Minimum pairwise distance between class means, in units of the
  // (unit) within-class standard deviation.
  double class_separation = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Reads a CSV with a header row. Columns other than label_column are
// features; label text is remapped to ids 1..L in first-appearance order and
// kept as class_names(). Errors name the offending line and column.
LabeledDataset load_csv(const std::filesystem::path& path, std::string_view label_column = "label");

// One sample per row: label column first, then f1..fd in shortest
// round-trip decimal form. Labels are written as class_names().
void save_csv(const LabeledDataset& dataset, const std::filesystem::path& path,
              std::string_view label_column = "label");

// Draws train_per_class columns per class without replacement for the train
// set; the remainder goes to the test set. Both keep the original column order.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset, Index train_per_class,
                                                std::uint64_t seed);

LabeledDataset synth_gaussian(const SynthSpec& spec);

// Scales every column to unit l2 norm.
LabeledDataset normalize_samples(const LabeledDataset& dataset);

}  // namespace collabrep
