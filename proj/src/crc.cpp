#include "collabrep/crc.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <string>

namespace collabrep {

namespace {

void check_query(const Classifier& classifier, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != classifier.dim()) {
    throw InvalidArgument("classify: query has length " + std::to_string(y.size()) + ", expected " +
                          std::to_string(classifier.dim()));
  }
  if (!y.allFinite()) throw InvalidArgument("classify: query has non-finite entries");
}

}  // namespace

std::vector<int> Prediction::ranking() const {
  std::vector<int> order(residuals.size());
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return residuals[static_cast<std::size_t>(a - 1)] < residuals[static_cast<std::size_t>(b - 1)];
  });
  return order;
}

int argmin_class(std::span<const double> residuals) {
  if (residuals.empty()) throw InvalidArgument("argmin_class: no residuals");
  const double smallest = *std::min_element(residuals.begin(), residuals.end());
  const double slack = kTieTolerance * std::abs(smallest);
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (residuals[i] <= smallest + slack) return static_cast<int>(i) + 1;
  }
  return 1;  // only reached with NaN residuals
}

double BatchResult::rank_k_accuracy(int k) const {
  if (predictions.empty()) throw InvalidArgument("rank_k_accuracy: no predictions");
  std::size_t hits = 0;
  for (std::size_t q = 0; q < predictions.size(); ++q) {
    const auto order = predictions[q].ranking();
    if (k < 1 || k > static_cast<int>(order.size())) throw InvalidArgument("rank_k_accuracy: k outside 1..L");
    if (std::find(order.begin(), order.begin() + k, truths[q]) != order.begin() + k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

BatchResult batch_classify(const Classifier& classifier, const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const int> truths, Execution execution) {
  if (features.cols() == 0) throw InvalidArgument("batch_classify: empty test set");
  if (static_cast<std::size_t>(features.cols()) != truths.size()) {
    throw InvalidArgument("batch_classify: one truth label per column is required");
  }
  if (features.rows() != classifier.dim()) {
    throw InvalidArgument("batch_classify: test dimension " + std::to_string(features.rows()) + " does not match " +
                          std::to_string(classifier.dim()));
  }
  const Index n = features.cols();
  BatchResult result;
  result.predictions.resize(static_cast<std::size_t>(n));
  result.truths.assign(truths.begin(), truths.end());

  if (execution == Execution::serial) {
    for (Index j = 0; j < n; ++j) result.predictions[static_cast<std::size_t>(j)] = classifier.classify(features.col(j));
  } else {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (Index j = 0; j < n; ++j) {
      try {
        result.predictions[static_cast<std::size_t>(j)] = classifier.classify(features.col(j));
      } catch (...) {
#pragma omp critical(collabrep_batch_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::size_t correct = 0;
  for (std::size_t q = 0; q < result.predictions.size(); ++q) {
    if (result.predictions[q].label == result.truths[q]) ++correct;
    if (!result.predictions[q].converged) ++result.non_converged;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return result;
}

BatchResult batch_classify(const Classifier& classifier, const LabeledDataset& test, Execution execution) {
  return batch_classify(classifier, test.features(), test.labels(), execution);
}

ClassBlocks::ClassBlocks(const LabeledDataset& data) : matrix(data.dim(), data.size()) {
  offsets.push_back(0);
  Index at = 0;
  for (int c = 1; c <= data.num_classes(); ++c) {
    for (Index j : data.class_columns(c)) matrix.col(at++) = data.features().col(j);
    offsets.push_back(at);
  }
}

ClassBlocks::ClassBlocks(Eigen::MatrixXd blocks, std::vector<Index> block_offsets)
    : matrix(std::move(blocks)), offsets(std::move(block_offsets)) {
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != matrix.cols()) {
    throw InvalidArgument("class blocks: offsets do not cover the matrix");
  }
  for (std::size_t k = 1; k < offsets.size(); ++k) {
    if (offsets[k] <= offsets[k - 1]) throw InvalidArgument("class blocks: every block needs at least one column");
  }
}

Prediction residual_prediction(const ClassBlocks& blocks, const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::VectorXd& alpha, bool normalized) {
  Prediction out;
  const int classes = blocks.num_classes();
  out.residuals.resize(static_cast<std::size_t>(classes));
  out.block_norms.resize(static_cast<std::size_t>(classes));
  for (int c = 1; c <= classes; ++c) {
    const Index start = blocks.block_start(c);
    const Index width = blocks.block_size(c);
    const auto coeffs = alpha.segment(start, width);
    const double fit = (y - blocks.matrix.middleCols(start, width) * coeffs).squaredNorm();
    const double norm = coeffs.norm();
    out.block_norms[static_cast<std::size_t>(c - 1)] = norm;
    out.residuals[static_cast<std::size_t>(c - 1)] = normalized ? fit / std::max(norm, kBlockNormFloor) : fit;
  }
  out.label = argmin_class(out.residuals);
  return out;
}

CrcL2Model::CrcL2Model(ClassBlocks blocks, RidgeProjector projector)
    : blocks_(std::move(blocks)), projector_(std::move(projector)) {}

CrcL2Model CrcL2Model::fit(const LabeledDataset& train, double lambda) {
  ClassBlocks blocks(train);
  RidgeProjector projector(blocks.matrix, lambda);
  return CrcL2Model(std::move(blocks), std::move(projector));
}

Prediction CrcL2Model::classify(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  check_query(*this, y);
  const Eigen::VectorXd alpha = projector_.apply(y);
  return residual_prediction(blocks_, y, alpha, /*normalized=*/true);
}

Prediction classify_crc_l2(const CrcL2Model& model, const Eigen::Ref<const Eigen::VectorXd>& y) {
  return model.classify(y);
}

CrcL1Classifier::CrcL1Classifier(const LabeledDataset& train, LassoOptions options)
    : blocks_(train), solver_(blocks_.matrix), options_(options) {
  if (!(options_.lambda > 0.0)) throw InvalidArgument("crc_l1: lambda must be > 0");
  if (!(options_.tol > 0.0)) throw InvalidArgument("crc_l1: tol must be > 0");
}

Prediction CrcL1Classifier::classify(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  check_query(*this, y);
  const LassoResult coding = solver_.solve(y, options_);
  Prediction out = residual_prediction(blocks_, y, coding.coefficients, /*normalized=*/false);
  out.converged = coding.converged;
  return out;
}

Prediction classify_crc_l1(const LabeledDataset& train, const Eigen::Ref<const Eigen::VectorXd>& y,
                           const LassoOptions& options) {
  return CrcL1Classifier(train, options).classify(y);
}

}  // namespace collabrep
