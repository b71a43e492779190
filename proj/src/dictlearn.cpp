#include "collabrep/dictlearn.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <string>

namespace collabrep {

namespace {

std::vector<Index> offsets_from_sizes(const std::vector<Index>& sizes) {
  std::vector<Index> offsets{0};
  for (Index s : sizes) offsets.push_back(offsets.back() + s);
  return offsets;
}

void check_shapes(const LabeledDataset& train, const BlockDictionary& dictionary, const CoeffMatrix* coefficients,
                  const char* where) {
  if (dictionary.dim() != train.dim()) {
    throw InvalidArgument(std::string(where) + ": dictionary has " + std::to_string(dictionary.dim()) +
                          " rows, data has dimension " + std::to_string(train.dim()));
  }
  if (dictionary.num_classes() != train.num_classes()) {
    throw InvalidArgument(std::string(where) + ": dictionary has " + std::to_string(dictionary.num_classes()) +
                          " blocks for " + std::to_string(train.num_classes()) + " classes");
  }
  if (coefficients != nullptr &&
      (coefficients->values.rows() != dictionary.size() || coefficients->values.cols() != train.size())) {
    throw InvalidArgument(std::string(where) + ": coefficient matrix is " +
                          std::to_string(coefficients->values.rows()) + "x" +
                          std::to_string(coefficients->values.cols()) + ", expected " +
                          std::to_string(dictionary.size()) + "x" + std::to_string(train.size()));
  }
}

// Block update from the residual of the other blocks, X - D_\i A^\i.
SubdictionaryUpdate solve_block(const Eigen::MatrixXd& others_residual, const LabeledDataset& train,
                                const CoeffMatrix& coefficients, const BlockDictionary& dictionary, int label) {
  const Index n = train.size();
  const Index d = train.dim();
  const Index k = dictionary.block_size(label);
  const auto rows = coefficients.values.middleRows(dictionary.block_offset(label), k);
  const auto& own = train.class_columns(label);
  const auto own_count = static_cast<Index>(own.size());

  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(d, 2 * n);
  Eigen::MatrixXd V(k, 2 * n);
  U.leftCols(n) = others_residual;
  V.leftCols(n) = rows;
  for (Index c = 0; c < own_count; ++c) {
    U.col(n + c) = train.features().col(own[static_cast<std::size_t>(c)]);
    V.col(n + c) = rows.col(own[static_cast<std::size_t>(c)]);
  }
  Index at = n + own_count;
  for (Index j = 0; j < n; ++j) {
    if (train.labels()[static_cast<std::size_t>(j)] != label) V.col(at++) = rows.col(j);
  }

  const LstsqRightResult fit = lstsq_right(U, V);
  return {fit.solution, fit.regularized};
}

}  // namespace

BlockDictionary::BlockDictionary(Eigen::MatrixXd atoms, std::vector<Index> block_sizes)
    : atoms_(std::move(atoms)), block_sizes_(std::move(block_sizes)), offsets_(offsets_from_sizes(block_sizes_)) {
  if (block_sizes_.empty()) throw InvalidArgument("dictionary: no blocks");
  for (Index s : block_sizes_) {
    if (s < 1) throw InvalidArgument("dictionary: every block needs K_i >= 1");
  }
  if (offsets_.back() != atoms_.cols()) {
    throw InvalidArgument("dictionary: block sizes sum to " + std::to_string(offsets_.back()) + " but D has " +
                          std::to_string(atoms_.cols()) + " columns");
  }
  if (!atoms_.allFinite()) throw NumericalError("dictionary: non-finite atoms");
}

void BlockDictionary::set_block(int label, const Eigen::MatrixXd& values) {
  if (values.rows() != dim() || values.cols() != block_size(label)) {
    throw InvalidArgument("dictionary: block " + std::to_string(label) + " has the wrong shape");
  }
  atoms_.middleCols(block_offset(label), block_size(label)) = values;
}

void DlConfig::validate(int num_classes) const {
  if (!(lambda1 > 0.0) || !std::isfinite(lambda1)) throw InvalidArgument("dl-nscr: lambda1 must be > 0");
  if (static_cast<int>(block_sizes.size()) != num_classes) {
    throw InvalidArgument("dl-nscr: " + std::to_string(block_sizes.size()) + " block sizes for " +
                          std::to_string(num_classes) + " classes");
  }
  for (Index s : block_sizes) {
    if (s < 1) throw InvalidArgument("dl-nscr: every block size must be >= 1");
  }
  if (max_iters < 0) throw InvalidArgument("dl-nscr: max_iters must be >= 0");
  if (!(rel_tol >= 0.0)) throw InvalidArgument("dl-nscr: rel_tol must be >= 0");
}

double FitTrace::max_relative_increase() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < objective.size(); ++k) {
    const double scale = std::max(std::abs(objective[k - 1]), std::numeric_limits<double>::min());
    worst = std::max(worst, (objective[k] - objective[k - 1]) / scale);
  }
  return objective.size() < 2 ? 0.0 : worst;
}

double objective(const LabeledDataset& train, const BlockDictionary& dictionary, const CoeffMatrix& coefficients,
                 double lambda1) {
  check_shapes(train, dictionary, &coefficients, "objective");
  const Eigen::MatrixXd& X = train.features();
  const Eigen::MatrixXd& A = coefficients.values;
  double total = (X - dictionary.atoms() * A).squaredNorm() + lambda1 * A.squaredNorm();
  for (int i = 1; i <= dictionary.num_classes(); ++i) {
    const Eigen::MatrixXd partial = dictionary.block(i) * A.middleRows(dictionary.block_offset(i), dictionary.block_size(i));
    for (Index j = 0; j < X.cols(); ++j) {
      if (train.labels()[static_cast<std::size_t>(j)] == i) {
        total += (X.col(j) - partial.col(j)).squaredNorm();
      } else {
        total += partial.col(j).squaredNorm();
      }
    }
  }
  return total;
}

BlockDictionary init_dictionary_pca(const LabeledDataset& train, std::span<const Index> block_sizes,
                                    std::uint64_t seed) {
  if (static_cast<int>(block_sizes.size()) != train.num_classes()) {
    throw InvalidArgument("init: " + std::to_string(block_sizes.size()) + " block sizes for " +
                          std::to_string(train.num_classes()) + " classes");
  }
  std::vector<Index> sizes(block_sizes.begin(), block_sizes.end());
  Index total = 0;
  for (Index s : sizes) {
    if (s < 1) throw InvalidArgument("init: every block size must be >= 1");
    total += s;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index d = train.dim();
  Eigen::MatrixXd atoms(d, total);
  Index at = 0;
  for (int c = 1; c <= train.num_classes(); ++c) {
    const Eigen::MatrixXd block = train.class_block(c);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? sv(0) * static_cast<double>(std::max(block.rows(), block.cols())) *
                                              std::numeric_limits<double>::epsilon()
                                        : 0.0;
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;

    const Index want = sizes[static_cast<std::size_t>(c - 1)];
    const Index from_svd = std::min(want, rank);
    atoms.middleCols(at, from_svd) = svd.matrixU().leftCols(from_svd);
    for (Index k = from_svd; k < want; ++k) {
      Eigen::VectorXd v(d);
      do {
        for (Index r = 0; r < d; ++r) v(r) = normal(rng);
      } while (v.norm() == 0.0);
      atoms.col(at + k) = v.normalized();
    }
    at += want;
  }
  return BlockDictionary(std::move(atoms), std::move(sizes));
}

CoeffMatrix update_coefficients(const LabeledDataset& train, const BlockDictionary& dictionary, double lambda1,
                                CoefficientRule rule, Execution execution) {
  check_shapes(train, dictionary, nullptr, "update_coefficients");
  if (!(lambda1 > 0.0)) throw InvalidArgument("update_coefficients: lambda1 must be > 0");

  const Eigen::MatrixXd& D = dictionary.atoms();
  const Index K = dictionary.size();
  const Eigen::MatrixXd dtd = D.transpose() * D;
  const Eigen::MatrixXd dtx = D.transpose() * train.features();
  const int classes = train.num_classes();

  // Z_i^T Z_i = D^T D + (own-block part) + (confusion part); for the
  // block_confusion rule the sum of the last two is blockdiag(D_k^T D_k) for
  // every i, so one factorization serves all classes.
  Eigen::MatrixXd shared_system;
  if (rule == CoefficientRule::block_confusion) {
    shared_system = dtd;
    for (int k = 1; k <= classes; ++k) {
      const Index o = dictionary.block_offset(k);
      const Index s = dictionary.block_size(k);
      shared_system.block(o, o, s, s) += dtd.block(o, o, s, s);
    }
  }

  CoeffMatrix out{Eigen::MatrixXd::Zero(K, train.size())};
  auto solve_class = [&](int i) {
    const auto& cols = train.class_columns(i);
    const Index o = dictionary.block_offset(i);
    const Index s = dictionary.block_size(i);
    Eigen::MatrixXd rhs(K, static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) rhs.col(static_cast<Index>(c)) = dtx.col(cols[c]);
    rhs.middleRows(o, s) *= 2.0;

    Eigen::MatrixXd solution;
    if (rule == CoefficientRule::block_confusion) {
      solution = solve_regularized_gram(shared_system, rhs, lambda1);
    } else {
      Eigen::MatrixXd system = dtd;
      system.block(o, o, s, s) += dtd.block(o, o, s, s);
      for (Index r = 0; r < K; ++r) {
        if (r >= o && r < o + s) continue;
        for (Index q = 0; q < K; ++q) {
          if (q >= o && q < o + s) continue;
          system(r, q) += dtd(r, q);
        }
      }
      solution = solve_regularized_gram(system, rhs, lambda1);
    }
    for (std::size_t c = 0; c < cols.size(); ++c) out.values.col(cols[c]) = solution.col(static_cast<Index>(c));
  };

  if (execution == Execution::serial) {
    for (int i = 1; i <= classes; ++i) solve_class(i);
  } else {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int i = 1; i <= classes; ++i) {
      try {
        solve_class(i);
      } catch (...) {
#pragma omp critical(collabrep_astep_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

SubdictionaryUpdate update_subdictionary(const LabeledDataset& train, const BlockDictionary& dictionary,
                                         const CoeffMatrix& coefficients, int label) {
  check_shapes(train, dictionary, &coefficients, "update_subdictionary");
  const auto rows = coefficients.values.middleRows(dictionary.block_offset(label), dictionary.block_size(label));
  const Eigen::MatrixXd others =
      train.features() - dictionary.atoms() * coefficients.values + dictionary.block(label) * rows;
  return solve_block(others, train, coefficients, dictionary, label);
}

DlFit fit_dlnscr(const LabeledDataset& train, const DlConfig& config) {
  config.validate(train.num_classes());
  DlFit fit{init_dictionary_pca(train, config.block_sizes, config.seed),
            CoeffMatrix{Eigen::MatrixXd::Zero(0, 0)}, FitTrace{}};
  fit.coefficients.values = Eigen::MatrixXd::Zero(fit.dictionary.size(), train.size());

  auto record = [&](HalfStep step) {
    const double value = objective(train, fit.dictionary, fit.coefficients, config.lambda1);
    if (!std::isfinite(value)) {
      throw NumericalError("dl-nscr: objective became non-finite at iteration " +
                           std::to_string(fit.trace.iterations + 1) + "; input is numerically degenerate");
    }
    fit.trace.objective.push_back(value);
    fit.trace.steps.push_back(step);
    return value;
  };

  double previous = 0.0;
  for (int it = 1; it <= config.max_iters; ++it) {
    fit.coefficients = update_coefficients(train, fit.dictionary, config.lambda1, config.coefficient_rule,
                                           config.execution);
    record(HalfStep::coefficients);

    const Eigen::MatrixXd& A = fit.coefficients.values;
    Eigen::MatrixXd residual = train.features() - fit.dictionary.atoms() * A;
    for (int i = 1; i <= train.num_classes(); ++i) {
      const auto rows = A.middleRows(fit.dictionary.block_offset(i), fit.dictionary.block_size(i));
      residual += fit.dictionary.block(i) * rows;
      SubdictionaryUpdate update = solve_block(residual, train, fit.coefficients, fit.dictionary, i);
      if (update.regularized) ++fit.trace.singular_fallbacks;
      fit.dictionary.set_block(i, update.block);
      residual -= fit.dictionary.block(i) * rows;
    }
    const double current = record(HalfStep::dictionary);
    fit.trace.iterations = it;

    if (it > 1 && std::abs(previous - current) <= config.rel_tol * std::abs(previous)) {
      fit.trace.converged = true;
      break;
    }
    previous = current;
  }
  return fit;
}

DlnscrClassifier::DlnscrClassifier(BlockDictionary dictionary, double lambda1)
    : dictionary_(std::move(dictionary)),
      blocks_(dictionary_.atoms(), dictionary_.offsets()),
      projector_(dictionary_.atoms(), lambda1) {}

Prediction DlnscrClassifier::classify(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != dim()) {
    throw InvalidArgument("dl-nscr classify: query has length " + std::to_string(y.size()) + ", expected " +
                          std::to_string(dim()));
  }
  if (!y.allFinite()) throw InvalidArgument("dl-nscr classify: query has non-finite entries");
  return residual_prediction(blocks_, y, projector_.apply(y), /*normalized=*/true);
}

Prediction DlnscrClassifier::classify_set(const Eigen::Ref<const Eigen::MatrixXd>& queries, SetRule rule) const {
  if (queries.cols() < 1) throw InvalidArgument("dl-nscr classify_set: empty query set");
  if (queries.rows() != dim()) {
    throw InvalidArgument("dl-nscr classify_set: queries have " + std::to_string(queries.rows()) +
                          " rows, expected " + std::to_string(dim()));
  }
  if (!queries.allFinite()) throw InvalidArgument("dl-nscr classify_set: non-finite queries");

  const Eigen::MatrixXd codes = projector_.apply_columns(queries);
  const int classes = num_classes();
  std::vector<Eigen::MatrixXd> parts;
  Prediction out;
  out.block_norms.resize(static_cast<std::size_t>(classes));
  for (int i = 1; i <= classes; ++i) {
    const auto rows = codes.middleRows(dictionary_.block_offset(i), dictionary_.block_size(i));
    parts.push_back(dictionary_.block(i) * rows);
    out.block_norms[static_cast<std::size_t>(i - 1)] = rows.norm();
  }
  out.residuals.resize(static_cast<std::size_t>(classes));
  for (int i = 1; i <= classes; ++i) {
    const double own = (queries - parts[static_cast<std::size_t>(i - 1)]).squaredNorm();
    double value;
    if (rule == SetRule::normalized) {
      value = own / std::max(out.block_norms[static_cast<std::size_t>(i - 1)], kBlockNormFloor);
    } else {
      value = own;
      for (int j = 1; j <= classes; ++j) {
        if (j != i) value += parts[static_cast<std::size_t>(j - 1)].squaredNorm();
      }
    }
    out.residuals[static_cast<std::size_t>(i - 1)] = value;
  }
  out.label = argmin_class(out.residuals);
  return out;
}

Prediction classify_sample(const BlockDictionary& dictionary, double lambda1,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
  return DlnscrClassifier(dictionary, lambda1).classify(y);
}

Prediction classify_set(const BlockDictionary& dictionary, double lambda1, const Eigen::Ref<const Eigen::MatrixXd>& Y,
                        SetRule rule) {
  return DlnscrClassifier(dictionary, lambda1).classify_set(Y, rule);
}

}  // namespace collabrep
