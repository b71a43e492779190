#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

#include "collabrep/dataset.hpp"
#include "collabrep/execution.hpp"

namespace collabrep {

// Per-class dissimilarities for one query. label = argmin_i residuals[i-1],
// ties going to the lowest class id.
struct Prediction {
  int label = 0;
  std::vector<double> residuals;
  // ||alpha_i||_2 per class for coding-based classifiers, empty otherwise.
  std::vector<double> block_norms;
  // False when an iterative coder stopped before certifying optimality;
  // the label is then a best-effort answer.
  bool converged = true;

  // Class ids ordered by increasing residual (stable, so ties keep id order).
  std::vector<int> ranking() const;
};

// Residuals within this relative distance of the minimum count as tied, so
// classes that are equal up to rounding resolve to the lowest id.
inline constexpr double kTieTolerance = 1e-12;

// 1-based index of the smallest entry; the first one wins ties.
int argmin_class(std::span<const double> residuals);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual Prediction classify(const Eigen::Ref<const Eigen::VectorXd>& y) const = 0;
  virtual Index dim() const = 0;
  virtual int num_classes() const = 0;
};

struct BatchResult {
  std::vector<Prediction> predictions;
  std::vector<int> truths;
  double accuracy = 0.0;
  std::size_t non_converged = 0;

  // Fraction of queries whose true class is among the k smallest residuals.
  double rank_k_accuracy(int k) const;
};

// Classifies every column of `test` independently. Output order matches the
// column order regardless of execution mode. Throws on an empty test set or
// a dimension mismatch.
BatchResult batch_classify(const Classifier& classifier, const LabeledDataset& test,
                           Execution execution = Execution::parallel);
BatchResult batch_classify(const Classifier& classifier, const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const int> truths, Execution execution = Execution::parallel);

}  // namespace collabrep
