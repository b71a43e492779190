#include <cmath>
#include <string>

#include "collabrep/solvers.hpp"

namespace collabrep {

LassoResult lasso_cd_oracle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double lambda, double tol,
                            int max_sweeps) {
  if (!(lambda > 0.0)) throw InvalidArgument("lasso_cd_oracle: lambda must be > 0");
  if (!(tol > 0.0)) throw InvalidArgument("lasso_cd_oracle: tol must be > 0");
  if (design.rows() != y.size()) throw InvalidArgument("lasso_cd_oracle: shape mismatch");

  const Index q = design.cols();
  Eigen::VectorXd col_energy(q);
  for (Index j = 0; j < q; ++j) col_energy(j) = design.col(j).squaredNorm();

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd residual = y;  // y - Z alpha

  // Subgradient certificate computed from scratch: g = -2 Z^T (y - Z alpha).
  auto certificate = [&]() {
    const Eigen::VectorXd fit_residual = y - design * alpha;
    double worst = 0.0;
    for (Index j = 0; j < q; ++j) {
      const double g = -2.0 * design.col(j).dot(fit_residual);
      double v = 0.0;
      if (alpha(j) != 0.0) {
        v = std::abs(g + (alpha(j) > 0.0 ? lambda : -lambda));
      } else if (std::abs(g) > lambda) {
        v = std::abs(g) - lambda;
      }
      if (v > worst) worst = v;
    }
    return worst;
  };

  LassoResult result;
  int sweeps = 0;
  double violation = certificate();
  while (violation > tol && sweeps < max_sweeps) {
    ++sweeps;
    for (Index j = 0; j < q; ++j) {
      if (col_energy(j) == 0.0) continue;
      const double old = alpha(j);
      const double rho = design.col(j).dot(residual) + col_energy(j) * old;
      double updated = 0.0;
      if (rho > 0.5 * lambda) {
        updated = (rho - 0.5 * lambda) / col_energy(j);
      } else if (rho < -0.5 * lambda) {
        updated = (rho + 0.5 * lambda) / col_energy(j);
      }
      if (updated != old) {
        residual -= (updated - old) * design.col(j);
        alpha(j) = updated;
      }
    }
    residual = y - design * alpha;
    violation = certificate();
  }

  result.coefficients = alpha;
  result.iterations = sweeps;
  result.optimality_residual = violation;
  result.converged = violation <= tol;
  double l1 = 0.0;
  for (Index j = 0; j < q; ++j) l1 += std::abs(alpha(j));
  result.objective = (y - design * alpha).squaredNorm() + lambda * l1;
  return result;
}

}  // namespace collabrep
