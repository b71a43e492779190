#include <doctest.h>

#include "collabrep/dictlearn.hpp"
#include "test_util.hpp"

using namespace collabrep;

TEST_CASE("objective trivial values") {
  const LabeledDataset zero(Eigen::MatrixXd::Zero(3, 4), {1, 2, 1, 2});
  const BlockDictionary D(Eigen::MatrixXd::Ones(3, 2), {1, 1});
  CHECK(objective(zero, D, CoeffMatrix{Eigen::MatrixXd::Zero(2, 4)}, 0.5) == 0.0);

  // One class with X = D A exactly leaves only the regularizer.
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd atoms = testutil::random_matrix(5, 3, rng);
  const Eigen::MatrixXd A = testutil::random_matrix(3, 4, rng);
  const LabeledDataset single(atoms * A, {1, 1, 1, 1});
  const double value = objective(single, BlockDictionary(atoms, {3}), CoeffMatrix{A}, 0.25);
  CHECK(value == doctest::Approx(0.25 * A.squaredNorm()).epsilon(1e-12));

  CHECK_THROWS_AS(objective(zero, D, CoeffMatrix{Eigen::MatrixXd::Zero(3, 4)}, 0.5), InvalidArgument);
}

TEST_CASE("BlockDictionary validation") {
  CHECK_THROWS_AS(BlockDictionary(Eigen::MatrixXd::Ones(3, 3), {1, 1}), InvalidArgument);
  CHECK_THROWS_AS(BlockDictionary(Eigen::MatrixXd::Ones(3, 2), {2, 0}), InvalidArgument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(3, 2);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(BlockDictionary(bad, {1, 1}), NumericalError);
  BlockDictionary D(Eigen::MatrixXd::Zero(3, 5), {2, 3});
  CHECK(D.block_offset(2) == 2);
  D.set_block(2, Eigen::MatrixXd::Ones(3, 3));
  CHECK(D.atoms().rightCols(3).isOnes());
  CHECK(D.atoms().leftCols(2).isZero());
  CHECK_THROWS_AS(D.set_block(1, Eigen::MatrixXd::Ones(3, 3)), InvalidArgument);
}

TEST_CASE("PCA initialization") {
  std::mt19937_64 rng(2);
  const LabeledDataset ds = testutil::random_dataset(8, 2, 5, rng);
  const std::vector<Index> sizes{3, 2};
  const BlockDictionary D = init_dictionary_pca(ds, sizes, 4);
  for (int c = 1; c <= 2; ++c) {
    const Eigen::MatrixXd Di = D.block(c);
    CHECK((Di.transpose() * Di - Eigen::MatrixXd::Identity(Di.cols(), Di.cols())).norm() <= 1e-8);
  }
  CHECK(init_dictionary_pca(ds, sizes, 4).atoms() == D.atoms());

  // A single sample has rank 1: the first atom is the sample direction and
  // the fill is unit norm and seed dependent.
  Eigen::MatrixXd X(3, 2);
  X << 3, 1, 0, 1, 4, 1;
  const LabeledDataset tiny(X, {1, 2});
  const std::vector<Index> three{3, 1};
  const BlockDictionary T = init_dictionary_pca(tiny, three, 9);
  const Eigen::Vector3d dir = X.col(0).normalized();
  CHECK(std::abs(std::abs(T.atoms().col(0).dot(dir)) - 1.0) <= 1e-12);
  for (Index k = 0; k < T.size(); ++k) CHECK(T.atoms().col(k).norm() == doctest::Approx(1.0));
  CHECK(init_dictionary_pca(tiny, three, 10).atoms().col(1) != T.atoms().col(1));
  CHECK_THROWS_AS(init_dictionary_pca(tiny, std::vector<Index>{1}, 0), InvalidArgument);
}

TEST_CASE("coefficient step") {
  std::mt19937_64 rng(3);
  const BlockDictionary D(testutil::random_matrix(6, 4, rng), {2, 2});
  const LabeledDataset zero(Eigen::MatrixXd::Zero(6, 4), {1, 2, 1, 2});
  CHECK(update_coefficients(zero, D, 0.1).values.isZero(0.0));
  CHECK(update_coefficients(zero, D, 0.1, CoefficientRule::selector_stack).values.isZero(0.0));
  CHECK_THROWS_AS(update_coefficients(zero, D, 0.0), InvalidArgument);

  const LabeledDataset ds = testutil::random_dataset(6, 2, 3, rng);
  for (auto rule : {CoefficientRule::block_confusion, CoefficientRule::selector_stack}) {
    const double at_one = update_coefficients(ds, D, 1.0, rule).values.norm();
    const double at_big = update_coefficients(ds, D, 1e6, rule).values.norm();
    CHECK(at_big <= 1e-3 * at_one);
  }
}

TEST_CASE("block_confusion coefficient step minimizes the objective in A") {
  std::mt19937_64 rng(4);
  const LabeledDataset ds = testutil::random_dataset(7, 3, 4, rng);
  const BlockDictionary D(testutil::random_matrix(7, 6, rng), {2, 2, 2});
  const CoeffMatrix A = update_coefficients(ds, D, 0.3);
  const double best = objective(ds, D, A, 0.3);
  for (int k = 0; k < 50; ++k) {
    CoeffMatrix moved = A;
    moved.values += 1e-4 * testutil::random_matrix(6, ds.size(), rng);
    CHECK(objective(ds, D, moved, 0.3) >= best);
  }
}

TEST_CASE("dictionary step structure") {
  // One class, A = I: both reconstruction targets equal X, so D = X.
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd X = testutil::random_matrix(4, 3, rng);
  const LabeledDataset ds(X, {1, 1, 1});
  const BlockDictionary D(testutil::random_matrix(4, 3, rng), {3});
  const SubdictionaryUpdate up = update_subdictionary(ds, D, CoeffMatrix{Eigen::MatrixXd::Identity(3, 3)}, 1);
  CHECK_FALSE(up.regularized);
  CHECK(testutil::rel_diff(up.block, X) <= 1e-12);

  const LabeledDataset two = testutil::random_dataset(4, 2, 3, rng);
  const BlockDictionary D2(testutil::random_matrix(4, 2, rng), {1, 1});
  const SubdictionaryUpdate degenerate = update_subdictionary(two, D2, CoeffMatrix{Eigen::MatrixXd::Zero(2, 6)}, 2);
  CHECK(degenerate.regularized);
  CHECK(degenerate.block.isZero(0.0));
}

TEST_CASE("fit with zero iterations returns the initialization") {
  std::mt19937_64 rng(6);
  const LabeledDataset ds = testutil::random_dataset(6, 2, 4, rng);
  DlConfig config;
  config.block_sizes = {2, 2};
  config.max_iters = 0;
  config.seed = 3;
  const DlFit fit = fit_dlnscr(ds, config);
  CHECK_FALSE(fit.trace.converged);
  CHECK(fit.trace.iterations == 0);
  CHECK(fit.trace.objective.empty());
  CHECK(fit.dictionary.atoms() == init_dictionary_pca(ds, config.block_sizes, 3).atoms());
  CHECK(fit.coefficients.values.isZero(0.0));
}

TEST_CASE("fit trace alternates half-steps and converges on separable data") {
  const LabeledDataset ds = synth_gaussian({5, 50, 20, 8.0, 1});
  DlConfig config;
  config.block_sizes = std::vector<Index>(5, 1);
  const DlFit fit = fit_dlnscr(ds, config);
  CHECK(fit.trace.converged);
  CHECK(fit.trace.objective.size() == 2 * static_cast<std::size_t>(fit.trace.iterations));
  CHECK(fit.trace.steps.front() == HalfStep::coefficients);
  CHECK(fit.trace.steps.back() == HalfStep::dictionary);
  CHECK(fit.trace.max_relative_increase() <= 1e-10);
}

TEST_CASE("fit configuration errors") {
  std::mt19937_64 rng(7);
  const LabeledDataset ds = testutil::random_dataset(6, 2, 4, rng);
  DlConfig config;
  CHECK_THROWS_AS(fit_dlnscr(ds, config), InvalidArgument);  // no block sizes
  config.block_sizes = {1, 1, 1};
  CHECK_THROWS_AS(fit_dlnscr(ds, config), InvalidArgument);
  config.block_sizes = {1, 1};
  config.lambda1 = 0.0;
  CHECK_THROWS_AS(fit_dlnscr(ds, config), InvalidArgument);
  config.lambda1 = 1e-4;
  config.rel_tol = -1.0;
  CHECK_THROWS_AS(fit_dlnscr(ds, config), InvalidArgument);
}

TEST_CASE("fit aborts on a non-finite objective") {
  const LabeledDataset huge(Eigen::MatrixXd::Constant(3, 4, 1e200), {1, 2, 1, 2});
  DlConfig config;
  config.block_sizes = {1, 1};
  CHECK_THROWS_AS(fit_dlnscr(huge, config), NumericalError);
}

TEST_CASE("classification with identical blocks picks class 1") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd block = testutil::random_matrix(5, 2, rng);
  Eigen::MatrixXd atoms(5, 4);
  atoms << block, block;
  const BlockDictionary D(atoms, {2, 2});
  const Prediction single = classify_sample(D, 0.1, testutil::random_vector(5, rng));
  CHECK(single.residuals[0] == doctest::Approx(single.residuals[1]).epsilon(1e-12));
  CHECK(single.label == 1);
  const Eigen::MatrixXd Y = testutil::random_matrix(5, 3, rng);
  CHECK(classify_set(D, 0.1, Y).label == 1);
  CHECK(classify_set(D, 0.1, Y, SetRule::normalized).label == 1);
  CHECK_THROWS_AS(classify_sample(D, 0.1, Eigen::VectorXd::Zero(4)), InvalidArgument);
  CHECK_THROWS_AS(classify_set(D, 0.1, Eigen::MatrixXd(5, 0)), InvalidArgument);
}

TEST_CASE("set classification reductions") {
  std::mt19937_64 rng(9);
  const BlockDictionary D(testutil::random_matrix(6, 6, rng), {2, 2, 2});
  for (int k = 0; k < 30; ++k) {
    const Eigen::VectorXd y = testutil::random_vector(6, rng);
    CHECK(classify_set(D, 0.2, y, SetRule::normalized).label == classify_sample(D, 0.2, y).label);
  }
}
