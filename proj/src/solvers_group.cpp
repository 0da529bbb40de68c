#include <cassert>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "stabsel/solvers.hpp"
#include "solvers_detail.hpp"

namespace stabsel::solvers {

namespace {

struct GroupBlock {
  std::vector<int> members;
  double weight = 1.0;           // θ_g
  Eigen::MatrixXd x;             // N x |g| columns of the design
  Eigen::MatrixXd eigvecs;       // of A_g = (1/N) X_gᵀX_g
  Eigen::VectorXd eigvals;       // ascending, clamped at 0
};

// Exact minimizer of (1/2)vᵀA v - zᵀv + c||v||₂ for symmetric PSD A with
// eigendecomposition (U, D). Zero iff ||z|| ≤ c; otherwise v = U(D + (c/ρ)I)⁻¹Uᵀz
// where ρ = ||v|| solves Σ z̃_i²/(d_i ρ + c)² = 1, z̃ = Uᵀz. f(ρ) is strictly
// decreasing with f(0) > 0, so bracket-doubling plus bisection is safe.
Eigen::VectorXd block_minimizer(const GroupBlock& block, const Eigen::VectorXd& z, double c) {
  if (z.norm() <= c) return Eigen::VectorXd::Zero(z.size());
  Eigen::VectorXd zt = block.eigvecs.transpose() * z;
  auto excess = [&](double rho) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < zt.size(); ++i) {
      double denom = block.eigvals[i] * rho + c;
      s += (zt[i] / denom) * (zt[i] / denom);
    }
    return s - 1.0;
  };
  double hi = 1.0;
  int doublings = 0;
  while (excess(hi) > 0.0 && doublings < 200) {
    hi *= 2.0;
    ++doublings;
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  double rho = 0.5 * (lo + hi);
  Eigen::VectorXd scaled(zt.size());
  for (Eigen::Index i = 0; i < zt.size(); ++i) scaled[i] = zt[i] / (block.eigvals[i] + c / rho);
  return block.eigvecs * scaled;
}

double group_objective(const Eigen::VectorXd& residual, const std::vector<GroupBlock>& blocks,
                       const Eigen::VectorXd& beta, double lambda, double n) {
  double penalty = 0.0;
  for (const auto& block : blocks) {
    double norm2 = 0.0;
    for (size_t k = 0; k < block.members.size(); ++k) {
      double b = beta[block.members[k]];
      norm2 += b * b;
    }
    penalty += block.weight * std::sqrt(norm2);
  }
  return 0.5 * residual.squaredNorm() / n + lambda * penalty;
}

// max_g of the groupwise stationarity violation: ||X_gᵀr/N|| - λθ_g clamped
// at 0 for zero blocks, ||X_gᵀr/N - λθ_g β_g/||β_g|| || otherwise.
double group_kkt_residual(const Eigen::VectorXd& residual, const std::vector<GroupBlock>& blocks,
                          const Eigen::VectorXd& beta, double lambda, double n) {
  double worst = 0.0;
  for (const auto& block : blocks) {
    Eigen::VectorXd grad = (block.x.transpose() * residual) / n;
    Eigen::VectorXd bg(block.members.size());
    for (size_t k = 0; k < block.members.size(); ++k) bg[k] = beta[block.members[k]];
    double norm = bg.norm();
    double v = norm == 0.0 ? std::max(0.0, grad.norm() - lambda * block.weight)
                           : (grad - (lambda * block.weight / norm) * bg).norm();
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace

FitReport fit_group_lasso(const DatasetBundle& data, const PenaltyConfig& penalty,
                          const SolverOptions& opts) {
  data.validate();
  detail::require_finite(data.design, "design");
  detail::require_finite(data.response, "response");
  detail::require_positive_lambda(penalty.lambda);
  if (data.shape.n_outputs != 1)
    throw DataError("fit_group_lasso: requires a single output, got " +
                    std::to_string(data.shape.n_outputs));
  if (!data.groups.input_groups_partition(data.shape.n_inputs))
    throw DataError("fit_group_lasso: input groups must partition the inputs; "
                    "use fit_siol for overlapping or partial groups");

  const Eigen::MatrixXd& x = data.design;
  const Eigen::Index d = x.cols();
  const double n = static_cast<double>(x.rows());
  const double lambda = penalty.lambda;

  std::vector<GroupBlock> blocks(data.groups.input_groups.size());
  for (size_t g = 0; g < blocks.size(); ++g) {
    auto& block = blocks[g];
    block.members = data.groups.input_groups[g];
    block.weight = data.groups.input_weights[g];
    block.x.resize(x.rows(), static_cast<Eigen::Index>(block.members.size()));
    for (size_t k = 0; k < block.members.size(); ++k)
      block.x.col(static_cast<Eigen::Index>(k)) = x.col(block.members[k]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig((block.x.transpose() * block.x) / n);
    block.eigvecs = eig.eigenvectors();
    block.eigvals = eig.eigenvalues().cwiseMax(0.0);
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  if (opts.warm_start) {
    if (opts.warm_start->rows() != d || opts.warm_start->cols() != 1)
      throw DataError("fit_group_lasso: warm start shape mismatch");
    beta = opts.warm_start->col(0);
  }
  Eigen::VectorXd residual = data.response.col(0) - x * beta;

  FitReport report;
  report.coefficients.shape = data.shape;
#ifndef NDEBUG
  double prev_objective = group_objective(residual, blocks, beta, lambda, n);
#endif

  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (auto& block : blocks) {
      Eigen::VectorXd bg(block.members.size());
      for (size_t k = 0; k < block.members.size(); ++k) bg[k] = beta[block.members[k]];
      // z = A_g β_g + X_gᵀr/N is the gradient of the quadratic model at 0,
      // i.e. the correlation with the partial residual that excludes g.
      Eigen::VectorXd z = (block.x.transpose() * residual) / n;
      z.noalias() += block.eigvecs * (block.eigvals.asDiagonal() * (block.eigvecs.transpose() * bg));
      Eigen::VectorXd next = block_minimizer(block, z, lambda * block.weight);
      Eigen::VectorXd delta = next - bg;
      double change = delta.cwiseAbs().maxCoeff();
      if (change > 0.0) {
        residual.noalias() -= block.x * delta;
        for (size_t k = 0; k < block.members.size(); ++k) beta[block.members[k]] = next[k];
        max_change = std::max(max_change, change);
      }
    }
#ifndef NDEBUG
    double objective = group_objective(residual, blocks, beta, lambda, n);
    assert(objective <= prev_objective + 1e-10 * std::max(1.0, std::abs(prev_objective)));
    prev_objective = objective;
#endif
    if (max_change < opts.sweep_tol) {
      report.kkt_residual = group_kkt_residual(residual, blocks, beta, lambda, n);
      if (report.kkt_residual < opts.kkt_tol) {
        report.converged = true;
        ++sweep;
        break;
      }
    }
  }

  if (!report.converged)
    report.kkt_residual = group_kkt_residual(residual, blocks, beta, lambda, n);
  report.iterations = sweep;
  report.objective_value = group_objective(residual, blocks, beta, lambda, n);
  report.coefficients.values = beta;
  return report;
}

}  // namespace stabsel::solvers
