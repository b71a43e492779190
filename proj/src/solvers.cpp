#include "collabrep/solvers.hpp"

#include <cmath>
#include <string>

namespace collabrep {

namespace {

void require_positive_lambda(double lambda, const char* where) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument(std::string(where) + ": lambda must be a finite value > 0, got " + std::to_string(lambda));
  }
}

void require_finite(const Eigen::MatrixXd& m, const char* where, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(where) + ": " + what + " has non-finite entries");
}

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

}  // namespace

Eigen::MatrixXd solve_regularized_gram(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross, double lambda) {
  require_positive_lambda(lambda, "solve_regularized_gram");
  if (gram.rows() != gram.cols() || gram.rows() != cross.rows()) {
    throw InvalidArgument("solve_regularized_gram: shape mismatch");
  }
  Eigen::MatrixXd system = gram;
  system.diagonal().array() += lambda;

  Eigen::MatrixXd solution;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() == Eigen::Success) {
    solution = llt.solve(cross);
    solution += llt.solve(cross - system * solution);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success) throw NumericalError("solve_regularized_gram: factorization failed");
    solution = ldlt.solve(cross);
    solution += ldlt.solve(cross - system * solution);
  }
  if (!solution.allFinite()) throw NumericalError("solve_regularized_gram: non-finite solution");
  return solution;
}

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& design, const Eigen::MatrixXd& rhs, double lambda) {
  require_positive_lambda(lambda, "ridge_solve");
  if (design.rows() != rhs.rows()) {
    throw InvalidArgument("ridge_solve: design has " + std::to_string(design.rows()) + " rows, rhs has " +
                          std::to_string(rhs.rows()));
  }
  require_finite(design, "ridge_solve", "design");
  require_finite(rhs, "ridge_solve", "rhs");

  if (design.cols() <= design.rows()) {
    const Eigen::MatrixXd gram = design.transpose() * design;
    return solve_regularized_gram(gram, design.transpose() * rhs, lambda);
  }
  const Eigen::MatrixXd outer = design * design.transpose();
  return design.transpose() * solve_regularized_gram(outer, rhs, lambda);
}

double normal_equation_residual(const Eigen::MatrixXd& design, const Eigen::MatrixXd& rhs, double lambda,
                                const Eigen::MatrixXd& solution) {
  const Eigen::MatrixXd target = design.transpose() * rhs;
  const Eigen::MatrixXd lhs = design.transpose() * (design * solution) + lambda * solution;
  const double scale = target.norm();
  const double residual = (lhs - target).norm();
  return scale > 0.0 ? residual / scale : residual;
}

RidgeProjector::RidgeProjector(const Eigen::MatrixXd& design, double lambda) : lambda_(lambda) {
  require_positive_lambda(lambda, "ridge_projector");
  require_finite(design, "ridge_projector", "design");
  const Index p = design.rows();
  const Index q = design.cols();
  if (q <= p) {
    const Eigen::MatrixXd gram = design.transpose() * design;
    projector_ = solve_regularized_gram(gram, design.transpose(), lambda);
  } else {
    const Eigen::MatrixXd outer = design * design.transpose();
    projector_ = design.transpose() * solve_regularized_gram(outer, Eigen::MatrixXd::Identity(p, p), lambda);
  }

  const Eigen::MatrixXd check = design.transpose() * (design * projector_) + lambda * projector_ - design.transpose();
  const double scale = design.norm();
  if (check.norm() > 1e-8 * scale) {
    throw NumericalError("ridge_projector: residual " + std::to_string(check.norm()) + " exceeds 1e-8 * ||Z^T||_F");
  }
}

Eigen::VectorXd RidgeProjector::apply(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != projector_.cols()) {
    throw InvalidArgument("ridge_projector: input has length " + std::to_string(y.size()) + ", expected " +
                          std::to_string(projector_.cols()));
  }
  return projector_ * y;
}

Eigen::MatrixXd RidgeProjector::apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& Y) const {
  if (Y.rows() != projector_.cols()) {
    throw InvalidArgument("ridge_projector: input has " + std::to_string(Y.rows()) + " rows, expected " +
                          std::to_string(projector_.cols()));
  }
  return projector_ * Y;
}

double largest_eigenvalue(const Eigen::MatrixXd& symmetric, double tol, int max_iter) {
  const Index n = symmetric.rows();
  if (n == 0) return 0.0;
  Eigen::VectorXd v(n);
  for (Index k = 0; k < n; ++k) v(k) = 1.0 + 0.5 * std::sin(static_cast<double>(k + 1));
  v.normalize();
  double rayleigh = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = symmetric * v;
    const double estimate = v.dot(next);
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    v = next / norm;
    if (it > 0 && std::abs(estimate - rayleigh) <= tol * std::abs(estimate)) return estimate;
    rayleigh = estimate;
  }
  return rayleigh;
}

ProximalLasso::ProximalLasso(const Eigen::MatrixXd& design) : design_(design) {
  require_finite(design, "lasso_prox", "design");
  gram_ = design.transpose() * design;
  // Power iteration approaches sigma_max from below; inflate by 1% so the
  // step stays within the descent-lemma bound.
  lipschitz_ = 2.0 * largest_eigenvalue(gram_) * 1.01;
}

LassoResult ProximalLasso::solve(const Eigen::Ref<const Eigen::VectorXd>& y, const LassoOptions& options) const {
  require_positive_lambda(options.lambda, "lasso_prox");
  if (!(options.tol > 0.0)) throw InvalidArgument("lasso_prox: tol must be > 0");
  if (y.size() != design_.rows()) {
    throw InvalidArgument("lasso_prox: y has length " + std::to_string(y.size()) + ", expected " +
                          std::to_string(design_.rows()));
  }
  if (!y.allFinite()) throw InvalidArgument("lasso_prox: y has non-finite entries");

  const double lambda = options.lambda;
  const Index q = gram_.rows();
  const Eigen::VectorXd cross = design_.transpose() * y;
  const double energy = y.squaredNorm();

  auto objective_from_gram = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& ga) {
    return a.dot(ga) - 2.0 * cross.dot(a) + energy + lambda * a.lpNorm<1>();
  };
  auto stationarity = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& ga) {
    double worst = 0.0;
    for (Index j = 0; j < q; ++j) {
      const double g = 2.0 * (ga(j) - cross(j));
      double violation;
      if (a(j) > 0.0) {
        violation = std::abs(g + lambda);
      } else if (a(j) < 0.0) {
        violation = std::abs(g - lambda);
      } else {
        violation = std::max(std::abs(g) - lambda, 0.0);
      }
      worst = std::max(worst, violation);
    }
    return worst;
  };

  LassoResult result;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd gx = Eigen::VectorXd::Zero(q);
  double fx = energy;
  Eigen::VectorXd w = x;
  Eigen::VectorXd gw = gx;
  double t = 1.0;

  if (lipschitz_ == 0.0) {
    // Z = 0: every coefficient vector gives the same fit, zero is optimal.
    result.coefficients = x;
    result.optimality_residual = stationarity(x, gx);
    result.converged = result.optimality_residual <= options.tol;
    result.objective = energy;
    return result;
  }

  const double step = 1.0 / lipschitz_;
  int iterations = 0;
  double residual = stationarity(x, gx);
  while (residual > options.tol && iterations < options.max_iter) {
    ++iterations;
    Eigen::VectorXd z = w - step * 2.0 * (gw - cross);
    for (Index j = 0; j < q; ++j) z(j) = soft_threshold(z(j), lambda * step);
    const Eigen::VectorXd gz = gram_ * z;
    const double fz = objective_from_gram(z, gz);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));

    Eigen::VectorXd x_prev = x;
    Eigen::VectorXd gx_prev = gx;
    if (fz <= fx) {
      x = z;
      gx = gz;
      fx = fz;
    }
    const double a = t / t_next;
    const double b = (t - 1.0) / t_next;
    w = x + a * (z - x) + b * (x - x_prev);
    gw = gx + a * (gz - gx) + b * (gx - gx_prev);
    t = t_next;

    if (options.record_trace) result.trace.push_back(fx);
    residual = stationarity(x, gx);
  }

  result.coefficients = x;
  result.iterations = iterations;
  result.optimality_residual = residual;
  result.converged = residual <= options.tol;
  result.objective = (y - design_ * x).squaredNorm() + lambda * x.lpNorm<1>();
  return result;
}

LassoResult lasso_prox(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const LassoOptions& options) {
  return ProximalLasso(design).solve(y, options);
}

LstsqRightResult lstsq_right(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V, std::optional<double> eps) {
  if (U.cols() != V.cols()) {
    throw InvalidArgument("lstsq_right: U has " + std::to_string(U.cols()) + " columns, V has " +
                          std::to_string(V.cols()));
  }
  require_finite(U, "lstsq_right", "U");
  require_finite(V, "lstsq_right", "V");
  const Index k = V.rows();
  LstsqRightResult result;
  if (k == 0) {
    result.solution.resize(U.rows(), 0);
    return result;
  }

  const Eigen::MatrixXd vvt = V * V.transpose();
  const Eigen::MatrixXd uvt = U * V.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(vvt, Eigen::EigenvaluesOnly);
  const double smallest = spectrum.eigenvalues().minCoeff();
  const double largest = spectrum.eigenvalues().maxCoeff();
  const bool singular = !(largest > 0.0) || !(smallest > largest * 1e-12);

  if (!singular) {
    Eigen::LLT<Eigen::MatrixXd> llt(vvt);
    Eigen::MatrixXd transposed = llt.solve(uvt.transpose());
    transposed += llt.solve(uvt.transpose() - vvt * transposed);
    result.solution = transposed.transpose();
    return result;
  }

  result.regularized = true;
  result.epsilon = eps.value_or(1e-8 * vvt.trace() / static_cast<double>(k));
  if (!(result.epsilon > 0.0)) {
    // V = 0: every D fits equally well; return the minimum-norm choice.
    result.solution = Eigen::MatrixXd::Zero(U.rows(), k);
    return result;
  }
  result.solution = solve_regularized_gram(vvt, uvt.transpose(), result.epsilon).transpose();
  return result;
}

}  // namespace collabrep
