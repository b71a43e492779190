#include <doctest.h>

#include "collabrep/solvers.hpp"
#include "test_util.hpp"

using namespace collabrep;

TEST_CASE("ridge_solve diagonal and zero cases") {
  Eigen::VectorXd r(2);
  r << 2, 4;
  const Eigen::MatrixXd a = ridge_solve(Eigen::MatrixXd::Identity(2, 2), r, 1.0);
  CHECK(a(0, 0) == doctest::Approx(1.0));
  CHECK(a(1, 0) == doctest::Approx(2.0));
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd Z = testutil::random_matrix(5, 3, rng);
  CHECK(ridge_solve(Z, Eigen::MatrixXd::Zero(5, 2), 0.1).norm() == 0.0);
  CHECK_THROWS_AS(ridge_solve(Z, Eigen::MatrixXd::Zero(5, 2), 0.0), InvalidArgument);
  CHECK_THROWS_AS(ridge_solve(Z, Eigen::MatrixXd::Zero(4, 2), 0.1), InvalidArgument);
}

TEST_CASE("ridge_solve certifies on wide and tall designs") {
  std::mt19937_64 rng(2);
  for (auto [p, q] : {std::pair{6, 9}, std::pair{9, 6}, std::pair{1, 20}, std::pair{20, 1}}) {
    const Eigen::MatrixXd Z = testutil::random_matrix(p, q, rng);
    const Eigen::MatrixXd R = testutil::random_matrix(p, 3, rng);
    const Eigen::MatrixXd A = ridge_solve(Z, R, 0.1);
    CHECK(A.rows() == q);
    CHECK(normal_equation_residual(Z, R, 0.1, A) <= 1e-10);
  }
}

TEST_CASE("RidgeProjector") {
  const RidgeProjector identity(Eigen::MatrixXd::Identity(3, 3), 1.0);
  CHECK((identity.matrix() - 0.5 * Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-14);
  CHECK_THROWS_AS(RidgeProjector(Eigen::MatrixXd::Identity(3, 3), 0.0), InvalidArgument);

  std::mt19937_64 rng(3);
  const Eigen::MatrixXd Z = testutil::random_matrix(8, 12, rng);
  const RidgeProjector P(Z, 0.3);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd y = testutil::random_vector(8, rng);
    CHECK(testutil::rel_diff(P.apply(y), ridge_solve(Z, y, 0.3)) <= 1e-10);
  }
}

TEST_CASE("lasso on an orthonormal design is soft-thresholding") {
  Eigen::VectorXd y(2);
  y << 1.0, 0.2;
  LassoOptions opts;
  opts.lambda = 1.0;
  opts.tol = 1e-12;
  const LassoResult prox = lasso_prox(Eigen::MatrixXd::Identity(2, 2), y, opts);
  CHECK(prox.converged);
  CHECK(prox.coefficients(0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(std::abs(prox.coefficients(1)) <= 1e-12);
  const LassoResult cd = lasso_cd_oracle(Eigen::MatrixXd::Identity(2, 2), y, 1.0, 1e-10);
  CHECK(cd.coefficients(0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(cd.coefficients(1) == 0.0);
}

TEST_CASE("lasso zero cases") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd Z = testutil::random_matrix(10, 15, rng);
  LassoOptions opts;
  const LassoResult zero = lasso_prox(Z, Eigen::VectorXd::Zero(10), opts);
  CHECK(zero.coefficients.isZero(0.0));

  // lambda >= 2 ||Z^T y||_inf makes 0 optimal.
  const Eigen::VectorXd y = testutil::random_vector(10, rng);
  opts.lambda = 2.0 * (Z.transpose() * y).cwiseAbs().maxCoeff();
  const LassoResult big = lasso_prox(Z, y, opts);
  CHECK(big.coefficients.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(big.optimality_residual <= 1e-9);
  CHECK(lasso_cd_oracle(Z, y, opts.lambda, 1e-10).coefficients.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("lasso objective trace is non-increasing") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd Z = testutil::random_matrix(20, 30, rng);
  const Eigen::VectorXd y = testutil::random_vector(20, rng);
  LassoOptions opts;
  opts.lambda = 0.05;
  opts.record_trace = true;
  const LassoResult r = ProximalLasso(Z).solve(y, opts);
  REQUIRE(r.trace.size() >= 2);
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] <= r.trace[k - 1]);
  CHECK(r.converged);
  CHECK(r.optimality_residual <= 1e-6);
}

TEST_CASE("lasso reports non-convergence at the iteration cap") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd Z = testutil::random_matrix(20, 30, rng);
  const Eigen::VectorXd y = testutil::random_vector(20, rng);
  LassoOptions opts;
  opts.lambda = 1e-4;
  opts.max_iter = 3;
  const LassoResult r = lasso_prox(Z, y, opts);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  CHECK(r.coefficients.allFinite());
}

TEST_CASE("largest_eigenvalue") {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3, 3);
  S.diagonal() << 1, 5, 2;
  CHECK(largest_eigenvalue(S, 1e-12) == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(largest_eigenvalue(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("lstsq_right") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd U = testutil::random_matrix(4, 3, rng);
  const LstsqRightResult id = lstsq_right(U, Eigen::MatrixXd::Identity(3, 3));
  CHECK(testutil::rel_diff(id.solution, U) <= 1e-12);
  CHECK_FALSE(id.regularized);

  const Eigen::MatrixXd U2 = testutil::random_matrix(5, 20, rng);
  const Eigen::MatrixXd V = testutil::random_matrix(4, 20, rng);
  const LstsqRightResult fit = lstsq_right(U2, V);
  CHECK(((fit.solution * V - U2) * V.transpose()).norm() <= 1e-8 * U2.norm() * V.norm());

  const LstsqRightResult zero = lstsq_right(U2, Eigen::MatrixXd::Zero(4, 20));
  CHECK(zero.regularized);
  CHECK(zero.solution.isZero(0.0));

  Eigen::MatrixXd rank_deficient = V;
  rank_deficient.row(3) = rank_deficient.row(2);
  const LstsqRightResult fallback = lstsq_right(U2, rank_deficient);
  CHECK(fallback.regularized);
  CHECK(fallback.epsilon > 0.0);
  CHECK(fallback.solution.allFinite());
}
