#pragma once

#include <string>
#include <vector>

#include "stabsel/types.hpp"

namespace stabsel::solvers {

enum class AlgorithmId { kLasso, kGroupLasso, kSiol };

std::string to_string(AlgorithmId id);
AlgorithmId algorithm_from_string(const std::string& name);  // "lasso" | "group-lasso" | "siol"

/// Entries with |β| below this are treated as zero when extracting the
/// support; the smoothed SIOL solver never produces exact zeros in the
/// group-only directions.
inline constexpr double kSupportThreshold = 1e-8;

struct PenaltyConfig {
  double lambda = 0.0;     // λ, overall regularization
  double l1_weight = 1.0;  // w, entrywise L1 weight (SIOL only)
};

struct CoefficientMatrix {
  ProblemShape shape;
  Eigen::MatrixXd values;  // d x t

  Selection support(double threshold = kSupportThreshold) const;
};

struct FitReport {
  CoefficientMatrix coefficients;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolverOptions {
  double kkt_tol = 1e-6;    // lasso / group lasso KKT residual
  double sweep_tol = 1e-7;  // max coefficient change per full sweep
  int max_sweeps = 10000;

  // SIOL: smoothing continuation from mu_factor down to mu_min_factor
  // (both relative to the per-output objective scale (1/2N)||Y||^2/t), each
  // pass run to an objective plateau at rel_tol confirmed by the
  // prox-gradient mapping residual. Smoothed fits report converged at
  // siol_converged_tol (support-level accuracy; the exact residual is in
  // kkt_residual); fits with no group terms are exact-prox and held to
  // kkt_tol.
  double siol_rel_tol = 1e-9;
  double siol_mu_factor = 1e-4;
  double siol_mu_min_factor = 1e-7;
  double siol_converged_tol = 1e-2;
  int max_prox_steps = 50000;

  const Eigen::MatrixXd* warm_start = nullptr;  // optional d x t initial value
};

/// Lasso: (1/2N)||y - Xβ||² + λ||β||₁ by cyclic coordinate descent with
/// residual updates. Requires t = 1.
FitReport fit_lasso(const DatasetBundle& data, const PenaltyConfig& penalty,
                    const SolverOptions& opts = {});

/// Group lasso: (1/2N)||y - Xβ||² + λ Σ_g θ_g||β_g||₂ by block coordinate
/// descent with exact block minimizers. Requires t = 1 and input groups
/// that partition [1, d]; overlapping or non-covering groups are an error
/// (use fit_siol for those).
FitReport fit_group_lasso(const DatasetBundle& data, const PenaltyConfig& penalty,
                          const SolverOptions& opts = {});

/// Structured input-output lasso:
///   (1/2N)||Y - Xβ||² + λ(w Σ|β_ij| + Σ_g Σ_j θ_g||β_gj||₂ + Σ_i Σ_h φ_h||β_ih||₂)
/// by monotone FISTA with Nesterov smoothing of the (possibly overlapping)
/// group terms and an exact soft-threshold for the L1 term. Groups may
/// overlap and need not cover; with no groups and w = 1, t = 1 this reduces
/// to the lasso.
FitReport fit_siol(const DatasetBundle& data, const PenaltyConfig& penalty,
                   const SolverOptions& opts = {});

/// Dispatch on the algorithm id.
FitReport fit(const DatasetBundle& data, AlgorithmId id, const PenaltyConfig& penalty,
              const SolverOptions& opts = {});

/// Smallest λ (exactly for lasso/group lasso, a conservative verified
/// envelope for SIOL) at which the fit has empty support.
double lambda_max(const DatasetBundle& data, AlgorithmId id, double l1_weight = 1.0);

/// Geometric grid: lambda_max, lambda_max·decay, ..., length terms.
std::vector<double> lambda_grid(double lambda_max, double decay, int length);

}  // namespace stabsel::solvers
