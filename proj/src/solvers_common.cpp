#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stabsel/solvers.hpp"
#include "solvers_detail.hpp"

namespace stabsel::solvers {

std::string to_string(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::kLasso: return "lasso";
    case AlgorithmId::kGroupLasso: return "group-lasso";
    case AlgorithmId::kSiol: return "siol";
  }
  throw std::logic_error("unknown AlgorithmId");
}

AlgorithmId algorithm_from_string(const std::string& name) {
  if (name == "lasso") return AlgorithmId::kLasso;
  if (name == "group-lasso") return AlgorithmId::kGroupLasso;
  if (name == "siol") return AlgorithmId::kSiol;
  throw DataError("unknown algorithm '" + name + "' (expected lasso, group-lasso, or siol)");
}

Selection CoefficientMatrix::support(double threshold) const {
  std::vector<int> flat;
  for (Eigen::Index j = 0; j < values.cols(); ++j)
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      if (std::abs(values(i, j)) >= threshold) flat.push_back(static_cast<int>(i + values.rows() * j));
  return Selection::from_flat(shape, std::move(flat));
}

FitReport fit(const DatasetBundle& data, AlgorithmId id, const PenaltyConfig& penalty,
              const SolverOptions& opts) {
  switch (id) {
    case AlgorithmId::kLasso: return fit_lasso(data, penalty, opts);
    case AlgorithmId::kGroupLasso: return fit_group_lasso(data, penalty, opts);
    case AlgorithmId::kSiol: return fit_siol(data, penalty, opts);
  }
  throw std::logic_error("unknown AlgorithmId");
}

std::vector<double> lambda_grid(double lambda_max, double decay, int length) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max))
    throw std::invalid_argument("lambda_grid: lambda_max must be positive and finite");
  if (!(decay > 0.0 && decay < 1.0))
    throw std::invalid_argument("lambda_grid: decay must lie in (0, 1)");
  if (length < 1) throw std::invalid_argument("lambda_grid: length must be at least 1");
  std::vector<double> grid(static_cast<size_t>(length));
  grid[0] = lambda_max;
  for (int l = 1; l < length; ++l) grid[static_cast<size_t>(l)] = grid[static_cast<size_t>(l - 1)] * decay;
  return grid;
}

namespace {

double siol_lambda_envelope(const DatasetBundle& data, double l1_weight) {
  const auto d = data.shape.n_inputs;
  const auto t = data.shape.n_outputs;
  const double n = static_cast<double>(data.shape.n_samples);
  Eigen::MatrixXd grad = (data.design.transpose() * data.response) / n;

  // Per-entry weight that dominates the penalty's dual norm entrywise:
  // ω_ij = w + max_{g∋i} θ_g + max_{h∋j} φ_h. |grad_ij| ≤ λ ω_ij for all
  // (i, j) forces β = 0, so the max ratio is an upper bound for λ_max.
  Eigen::VectorXd in_w = Eigen::VectorXd::Zero(d);
  for (size_t g = 0; g < data.groups.input_groups.size(); ++g)
    for (int i : data.groups.input_groups[g])
      in_w[i] = std::max(in_w[i], data.groups.input_weights[g]);
  Eigen::VectorXd out_w = Eigen::VectorXd::Zero(t);
  for (size_t h = 0; h < data.groups.output_groups.size(); ++h)
    for (int j : data.groups.output_groups[h])
      out_w[j] = std::max(out_w[j], data.groups.output_weights[h]);

  double lambda_up = 0.0;
  for (int j = 0; j < t; ++j)
    for (int i = 0; i < d; ++i) {
      double omega = l1_weight + in_w[i] + out_w[j];
      if (std::abs(grad(i, j)) < 1e-300) continue;
      if (omega <= 0.0)
        throw DataError("lambda_max: entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                        ") carries no penalty, no finite lambda empties the support");
      lambda_up = std::max(lambda_up, std::abs(grad(i, j)) / omega);
    }
  if (lambda_up == 0.0) return 0.0;

  // The envelope ignores that overlapping group duals must be shared, so
  // verify by fitting and grow until the support is actually empty.
  SolverOptions probe;
  probe.siol_mu_min_factor = 1e-5;  // support emptiness is insensitive to the tail passes
  for (int attempt = 0; attempt < 60; ++attempt) {
    PenaltyConfig penalty{lambda_up, l1_weight};
    if (fit_siol(data, penalty, probe).coefficients.support().empty()) return lambda_up;
    lambda_up *= 1.3;
  }
  throw DataError("lambda_max: could not verify an empty-support lambda for siol");
}

}  // namespace

double lambda_max(const DatasetBundle& data, AlgorithmId id, double l1_weight) {
  data.validate();
  detail::require_finite(data.design, "design");
  detail::require_finite(data.response, "response");
  const double n = static_cast<double>(data.shape.n_samples);
  switch (id) {
    case AlgorithmId::kLasso: {
      if (data.shape.n_outputs != 1) throw DataError("lambda_max: lasso requires a single output");
      return ((data.design.transpose() * data.response.col(0)) / n).cwiseAbs().maxCoeff();
    }
    case AlgorithmId::kGroupLasso: {
      if (data.shape.n_outputs != 1) throw DataError("lambda_max: group lasso requires a single output");
      auto partition = data.groups.input_groups_partition(data.shape.n_inputs);
      if (!partition)
        throw DataError("lambda_max: group lasso requires input groups that partition the inputs; "
                        "use siol for overlapping or partial groups");
      Eigen::VectorXd corr = (data.design.transpose() * data.response.col(0)) / n;
      double best = 0.0;
      for (size_t g = 0; g < data.groups.input_groups.size(); ++g) {
        double norm2 = 0.0;
        for (int i : data.groups.input_groups[g]) norm2 += corr[i] * corr[i];
        best = std::max(best, std::sqrt(norm2) / data.groups.input_weights[g]);
      }
      return best;
    }
    case AlgorithmId::kSiol:
      return siol_lambda_envelope(data, l1_weight);
  }
  throw std::logic_error("unknown AlgorithmId");
}

}  // namespace stabsel::solvers
