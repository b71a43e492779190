#pragma once

#include <Eigen/Dense>

#include <vector>

#include "collabrep/classifier.hpp"
#include "collabrep/dataset.hpp"
#include "collabrep/solvers.hpp"

namespace collabrep {

// Training columns regrouped as [X_1, ..., X_L] with block offsets.
struct ClassBlocks {
  Eigen::MatrixXd matrix;
  std::vector<Index> offsets;  // size L + 1

  explicit ClassBlocks(const LabeledDataset& data);
  ClassBlocks(Eigen::MatrixXd blocks, std::vector<Index> block_offsets);

  int num_classes() const noexcept { return static_cast<int>(offsets.size()) - 1; }
  Index block_size(int label) const { return offsets[static_cast<std::size_t>(label)] - offsets[static_cast<std::size_t>(label - 1)]; }
  Index block_start(int label) const { return offsets[static_cast<std::size_t>(label - 1)]; }
};

// Per-class residual ||y - X_i alpha_i||^2, divided by max(||alpha_i||, 1e-12)
// when `normalized`.
Prediction residual_prediction(const ClassBlocks& blocks, const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::VectorXd& alpha, bool normalized);

inline constexpr double kBlockNormFloor = 1e-12;

// CRC with l2 coding: alpha = P y with the ridge projector over the training
// matrix, residuals normalized by the class coefficient norm.
class CrcL2Model final : public Classifier {
 public:
  static CrcL2Model fit(const LabeledDataset& train, double lambda);

  Prediction classify(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  Index dim() const override { return blocks_.matrix.rows(); }
  int num_classes() const override { return blocks_.num_classes(); }

  const RidgeProjector& projector() const noexcept { return projector_; }
  const ClassBlocks& blocks() const noexcept { return blocks_; }
  double lambda() const noexcept { return projector_.lambda(); }

 private:
  CrcL2Model(ClassBlocks blocks, RidgeProjector projector);
  ClassBlocks blocks_;
  RidgeProjector projector_;
};

Prediction classify_crc_l2(const CrcL2Model& model, const Eigen::Ref<const Eigen::VectorXd>& y);

// CRC with l1 (lasso) coding over the whole training matrix and plain
// per-class residuals.
class CrcL1Classifier final : public Classifier {
 public:
  CrcL1Classifier(const LabeledDataset& train, LassoOptions options);

  Prediction classify(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  Index dim() const override { return blocks_.matrix.rows(); }
  int num_classes() const override { return blocks_.num_classes(); }
  const LassoOptions& options() const noexcept { return options_; }

 private:
  ClassBlocks blocks_;
  ProximalLasso solver_;
  LassoOptions options_;
};

Prediction classify_crc_l1(const LabeledDataset& train, const Eigen::Ref<const Eigen::VectorXd>& y,
                           const LassoOptions& options);

}  // namespace collabrep
