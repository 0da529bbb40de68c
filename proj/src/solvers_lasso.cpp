#include <cassert>
#include <cmath>

#include "stabsel/solvers.hpp"
#include "solvers_detail.hpp"

namespace stabsel::solvers {

namespace {

double lasso_objective(const Eigen::VectorXd& residual, const Eigen::VectorXd& beta, double lambda,
                       double n) {
  return 0.5 * residual.squaredNorm() / n + lambda * beta.lpNorm<1>();
}

// max_j of the stationarity violation: |x_jᵀr/N| - λ for zero coefficients
// (clamped at 0), |x_jᵀr/N - λ sign(β_j)| otherwise.
double lasso_kkt_residual(const Eigen::MatrixXd& x, const Eigen::VectorXd& residual,
                          const Eigen::VectorXd& beta, double lambda, double n) {
  Eigen::VectorXd grad = (x.transpose() * residual) / n;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double v = beta[j] == 0.0 ? std::max(0.0, std::abs(grad[j]) - lambda)
                              : std::abs(grad[j] - lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace

FitReport fit_lasso(const DatasetBundle& data, const PenaltyConfig& penalty,
                    const SolverOptions& opts) {
  data.validate();
  detail::require_finite(data.design, "design");
  detail::require_finite(data.response, "response");
  detail::require_positive_lambda(penalty.lambda);
  if (data.shape.n_outputs != 1)
    throw DataError("fit_lasso: requires a single output, got " +
                    std::to_string(data.shape.n_outputs));

  const Eigen::MatrixXd& x = data.design;
  const Eigen::Index d = x.cols();
  const double n = static_cast<double>(x.rows());
  const double lambda = penalty.lambda;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  if (opts.warm_start) {
    if (opts.warm_start->rows() != d || opts.warm_start->cols() != 1)
      throw DataError("fit_lasso: warm start shape mismatch");
    beta = opts.warm_start->col(0);
  }

  // Column scales (1/N)||x_j||²; exactly 1 only for fully standardized data,
  // so keep the general form for subsampled rows.
  Eigen::VectorXd col_scale = x.colwise().squaredNorm() / n;
  for (Eigen::Index j = 0; j < d; ++j)
    if (col_scale[j] < 1e-12 && beta[j] != 0.0) beta[j] = 0.0;

  Eigen::VectorXd residual = data.response.col(0) - x * beta;

  FitReport report;
  report.coefficients.shape = data.shape;
#ifndef NDEBUG
  double prev_objective = lasso_objective(residual, beta, lambda, n);
#endif

  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (col_scale[j] < 1e-12) continue;
      double old = beta[j];
      double rho = x.col(j).dot(residual) / n + col_scale[j] * old;
      double next = detail::soft_threshold(rho, lambda) / col_scale[j];
      if (next != old) {
        residual.noalias() -= x.col(j) * (next - old);
        beta[j] = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
#ifndef NDEBUG
    double objective = lasso_objective(residual, beta, lambda, n);
    assert(objective <= prev_objective + 1e-10 * std::max(1.0, std::abs(prev_objective)));
    prev_objective = objective;
#endif
    if (max_change < opts.sweep_tol) {
      report.kkt_residual = lasso_kkt_residual(x, residual, beta, lambda, n);
      if (report.kkt_residual < opts.kkt_tol) {
        report.converged = true;
        ++sweep;
        break;
      }
    }
  }

  if (!report.converged) report.kkt_residual = lasso_kkt_residual(x, residual, beta, lambda, n);
  report.iterations = sweep;
  report.objective_value = lasso_objective(residual, beta, lambda, n);
  report.coefficients.values = beta;
  return report;
}

}  // namespace stabsel::solvers
