#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "collabrep/errors.hpp"

namespace collabrep {

using Index = Eigen::Index;

// Solves (G + lambda I) X = C for a symmetric positive semidefinite G.
// lambda must be > 0. Cholesky with one step of iterative refinement.
Eigen::MatrixXd solve_regularized_gram(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross, double lambda);

// argmin_A ||R - Z A||_F^2 + lambda ||A||_F^2 for Z (p x q), R (p x m).
// Uses the q x q normal system when q <= p and the p x p push-through form
// Z^T (Z Z^T + lambda I)^{-1} R otherwise.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& design, const Eigen::MatrixXd& rhs, double lambda);

// ||(Z^T Z + lambda I) A - Z^T R||_F / ||Z^T R||_F (0 when Z^T R = 0).
double normal_equation_residual(const Eigen::MatrixXd& design, const Eigen::MatrixXd& rhs, double lambda,
                                const Eigen::MatrixXd& solution);

// The linear map y -> argmin_a ||y - Z a||^2 + lambda ||a||^2, i.e.
// P = (Z^T Z + lambda I)^{-1} Z^T, precomputed once per design.
class RidgeProjector {
 public:
  // Throws NumericalError if ||(Z^T Z + lambda I) P - Z^T||_F > 1e-8 ||Z^T||_F.
  RidgeProjector(const Eigen::MatrixXd& design, double lambda);

  const Eigen::MatrixXd& matrix() const noexcept { return projector_; }
  double lambda() const noexcept { return lambda_; }
  Index input_dim() const noexcept { return projector_.cols(); }
  Index output_dim() const noexcept { return projector_.rows(); }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Eigen::MatrixXd apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& Y) const;

 private:
  Eigen::MatrixXd projector_;
  double lambda_ = 0.0;
};

struct LassoOptions {
  double lambda = 1e-4;
  double tol = 1e-6;
  int max_iter = 100000;
  bool record_trace = false;
};

struct LassoResult {
  Eigen::VectorXd coefficients;
  double objective = 0.0;
  // max_j distance of 2 (Z^T Z a - Z^T y)_j to -lambda * subdifferential(|a_j|)
  double optimality_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  // Objective after each iteration when LassoOptions::record_trace is set.
  std::vector<double> trace;
};

// Monotone accelerated proximal gradient (MFISTA) for
//   min_a ||y - Z a||_2^2 + lambda ||a||_1
// with step 1 / (2 sigma_max(Z^T Z)). The Gram matrix and the spectral
// estimate are computed once, so one instance serves many right-hand sides.
class ProximalLasso {
 public:
  explicit ProximalLasso(const Eigen::MatrixXd& design);

  // Returns converged = false with the best iterate when max_iter is reached.
  LassoResult solve(const Eigen::Ref<const Eigen::VectorXd>& y, const LassoOptions& options) const;

  Index num_coefficients() const noexcept { return gram_.rows(); }
  double lipschitz() const noexcept { return lipschitz_; }

 private:
  Eigen::MatrixXd design_;
  Eigen::MatrixXd gram_;
  double lipschitz_ = 0.0;
};

LassoResult lasso_prox(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const LassoOptions& options);

// Cyclic coordinate descent on the same objective. Shares no code with the
// proximal solver and serves as its oracle.
LassoResult lasso_cd_oracle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double lambda, double tol,
                            int max_sweeps = 1000000);

// Largest eigenvalue of a symmetric positive semidefinite matrix by power
// iteration, stopping once the Rayleigh quotient changes by less than tol (relative).
double largest_eigenvalue(const Eigen::MatrixXd& symmetric, double tol = 1e-6, int max_iter = 10000);

struct LstsqRightResult {
  Eigen::MatrixXd solution;
  // True when V V^T was numerically singular and epsilon was added.
  bool regularized = false;
  double epsilon = 0.0;
};

// D = U V^T (V V^T)^{-1}, the minimizer of ||U - D V||_F^2. When V V^T has a
// condition estimate above 1e12 the regularized U V^T (V V^T + eps I)^{-1} is
// returned instead; eps defaults to 1e-8 trace(V V^T) / k.
LstsqRightResult lstsq_right(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                             std::optional<double> eps = std::nullopt);

}  // namespace collabrep
