#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "collabrep/classifier.hpp"
#include "collabrep/crc.hpp"
#include "collabrep/dataset.hpp"
#include "collabrep/execution.hpp"
#include "collabrep/solvers.hpp"

namespace collabrep {

// D = [D_1, ..., D_L] (d x K) with K_i columns per class block.
class BlockDictionary {
 public:
  BlockDictionary() = default;
  BlockDictionary(Eigen::MatrixXd atoms, std::vector<Index> block_sizes);

  const Eigen::MatrixXd& atoms() const noexcept { return atoms_; }
  const std::vector<Index>& block_sizes() const noexcept { return block_sizes_; }
  const std::vector<Index>& offsets() const noexcept { return offsets_; }

  Index dim() const noexcept { return atoms_.rows(); }
  Index size() const noexcept { return atoms_.cols(); }
  int num_classes() const noexcept { return static_cast<int>(block_sizes_.size()); }
  Index block_size(int label) const { return block_sizes_.at(static_cast<std::size_t>(label - 1)); }
  Index block_offset(int label) const { return offsets_.at(static_cast<std::size_t>(label - 1)); }

  auto block(int label) const { return atoms_.middleCols(block_offset(label), block_size(label)); }
  void set_block(int label, const Eigen::MatrixXd& values);

 private:
  Eigen::MatrixXd atoms_;
  std::vector<Index> block_sizes_;
  std::vector<Index> offsets_;
};

// A (K x n): row block i holds the coefficients on D_i; columns follow the
// training set's column order, so A_j^i is row block i restricted to the
// columns of class j.
struct CoeffMatrix {
  Eigen::MatrixXd values;
};

// How the coefficient step treats the confusion term for samples of class i.
enum class CoefficientRule {
  // Sum of per-block energies sum_{k != i} ||D_k A_i^k||^2, the exact
  // minimizer of the fidelity objective. Default.
  block_confusion,
  // Energy of the summed reconstruction ||D S_\i S_\i^T A_i||^2 built from
  // selector matrices. Kept for comparison; it does not exactly minimize the
  // objective, so the trace may rise slightly at coefficient steps.
  selector_stack,
};

// Residual rule for classifying a set of queries Y at once.
enum class SetRule {
  // ||Y - D_i A^i||_F^2 + sum_{j != i} ||D_j A^j||_F^2
  confusion_energy,
  // ||Y - D_i A^i||_F^2 / max(||A^i||_F, 1e-12)
  normalized,
};

struct DlConfig {
  double lambda1 = 1e-4;
  std::vector<Index> block_sizes;
  int max_iters = 50;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  CoefficientRule coefficient_rule = CoefficientRule::block_confusion;
  Execution execution = Execution::parallel;

  void validate(int num_classes) const;
};

enum class HalfStep { coefficients, dictionary };

struct FitTrace {
  // Objective after every half-step, in order.
  std::vector<double> objective;
  std::vector<HalfStep> steps;
  bool converged = false;
  int iterations = 0;
  // Dictionary-block updates that needed the regularized fallback.
  int singular_fallbacks = 0;

  // Largest relative increase between consecutive recorded objectives (<= 0 if monotone).
  double max_relative_increase() const;
};

struct DlFit {
  BlockDictionary dictionary;
  CoeffMatrix coefficients;
  FitTrace trace;
};

// ||X - D A||_F^2 + sum_i ||X_i - D_i A_i^i||_F^2 + sum_i sum_{j != i} ||D_i A_j^i||_F^2 + lambda1 ||A||_F^2
double objective(const LabeledDataset& train, const BlockDictionary& dictionary, const CoeffMatrix& coefficients,
                 double lambda1);

// D_i = top-K_i left singular vectors of X_i (no centering). Missing columns
// when rank(X_i) < K_i are unit-norm Gaussian draws from `seed`.
BlockDictionary init_dictionary_pca(const LabeledDataset& train, std::span<const Index> block_sizes,
                                    std::uint64_t seed);

// Coefficient step with D fixed. Classes are independent sub-problems and are
// solved in parallel under Execution::parallel.
CoeffMatrix update_coefficients(const LabeledDataset& train, const BlockDictionary& dictionary, double lambda1,
                                CoefficientRule rule = CoefficientRule::block_confusion,
                                Execution execution = Execution::parallel);

struct SubdictionaryUpdate {
  Eigen::MatrixXd block;
  bool regularized = false;
};

// argmin_{D_i} ||U_i - D_i V_i||_F^2 with
//   U_i = [X - D_\i A^\i, X_i, 0],  V_i = [A^i, A_i^i, A_\i^i].
SubdictionaryUpdate update_subdictionary(const LabeledDataset& train, const BlockDictionary& dictionary,
                                         const CoeffMatrix& coefficients, int label);

// Alternates a coefficient step with one sweep of block updates (1..L, each
// seeing the blocks already refreshed in the sweep) until the objective
// changes by less than rel_tol over a full iteration. max_iters = 0 returns
// the initialization with zero coefficients and converged = false.
DlFit fit_dlnscr(const LabeledDataset& train, const DlConfig& config);

class DlnscrClassifier final : public Classifier {
 public:
  DlnscrClassifier(BlockDictionary dictionary, double lambda1);

  Prediction classify(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  Prediction classify_set(const Eigen::Ref<const Eigen::MatrixXd>& queries,
                          SetRule rule = SetRule::confusion_energy) const;
  Index dim() const override { return dictionary_.dim(); }
  int num_classes() const override { return dictionary_.num_classes(); }
  const BlockDictionary& dictionary() const noexcept { return dictionary_; }

 private:
  BlockDictionary dictionary_;
  ClassBlocks blocks_;
  RidgeProjector projector_;
};

Prediction classify_sample(const BlockDictionary& dictionary, double lambda1,
                           const Eigen::Ref<const Eigen::VectorXd>& y);
Prediction classify_set(const BlockDictionary& dictionary, double lambda1, const Eigen::Ref<const Eigen::MatrixXd>& Y,
                        SetRule rule = SetRule::confusion_energy);

}  // namespace collabrep
