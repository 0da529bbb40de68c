#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stabsel/solvers.hpp"
#include "stabsel/types.hpp"

namespace stabsel::meta {

/// A selection algorithm f: fixed algorithm and penalty weights, with λ
/// supplied per call by the regime drivers.
struct SubAlgorithm {
  solvers::AlgorithmId algorithm = solvers::AlgorithmId::kLasso;
  solvers::PenaltyConfig penalty;
};

/// Interface the regime drivers program against. Implementations must be
/// deterministic: identical data and λ yield identical fits. Tests inject
/// scripted and counting selectors; drivers call fit() for every
/// sub-algorithm invocation, in ascending iteration order.
class Selector {
 public:
  virtual ~Selector() = default;
  /// λ at which the fit on this data has empty support.
  virtual double lambda_max(const DatasetBundle& data) = 0;
  /// Fit at λ; warm_start is an optional d x t initial value.
  virtual solvers::FitReport fit(const DatasetBundle& data, double lambda,
                                 const Eigen::MatrixXd* warm_start) = 0;
};

/// The production selector: wraps the solvers module.
class SolverSelector : public Selector {
 public:
  explicit SolverSelector(const SubAlgorithm& sub) : sub_(sub) {}
  double lambda_max(const DatasetBundle& data) override;
  solvers::FitReport fit(const DatasetBundle& data, double lambda,
                         const Eigen::MatrixXd* warm_start) override;

 private:
  SubAlgorithm sub_;
};

/// Decorator counting fit() invocations; regimes are verified against it.
class CountingSelector : public Selector {
 public:
  explicit CountingSelector(Selector& inner) : inner_(inner) {}
  double lambda_max(const DatasetBundle& data) override { return inner_.lambda_max(data); }
  solvers::FitReport fit(const DatasetBundle& data, double lambda,
                         const Eigen::MatrixXd* warm_start) override {
    ++count_;
    return inner_.fit(data, lambda, warm_start);
  }
  int count() const { return count_; }

 private:
  Selector& inner_;
  int count_ = 0;
};

struct StabilityConfig {
  double subsample_fraction = 0.5;  // p
  int iterations = 100;             // I
  double threshold = 0.9;           // π in (0.5, 1]
  std::uint64_t seed = 0;
};

struct StabilityProfile {
  ProblemShape shape;
  std::vector<int> counts;           // per flat element, selections across iterations
  std::vector<int> iteration_sizes;  // |S_iter| per iteration
  int iterations = 0;                // I
  int failures = 0;                  // non-converged iterations, counted as empty

  std::vector<double> tau() const;  // counts / I
  double q_hat() const;             // Σ_k counts_k / I, exact by integer sum
};

struct StabilityOutcome {
  StabilityProfile profile;
  Selection selection;
  int invocations = 0;
};

/// S_stable = {k : τ_k ≥ π} via integer counts (counts ≥ ⌈π·I⌉, boundary
/// inclusive). π must lie in (0.5, 1].
Selection threshold_profile(const StabilityProfile& profile, double pi);

/// The rows iteration `iteration` subsamples: ⌊p·N⌋ distinct indices drawn
/// from the (cfg.seed, iteration) stream. Shared by stability_select and
/// the calibration path driver so their profiles line up exactly.
std::vector<int> subsample_rows(Eigen::Index n_samples, const StabilityConfig& cfg, int iteration);

/// Stability selection: I uniform subsamples of ⌊p·N⌋ rows without
/// replacement, the sub-algorithm at fixed λ on each, S = {k : τ_k ≥ π}.
StabilityOutcome stability_select(const DatasetBundle& data, Selector& selector, double lambda,
                                  const StabilityConfig& cfg);
StabilityOutcome stability_select(const DatasetBundle& data, const SubAlgorithm& sub,
                                  const StabilityConfig& cfg);

struct StabilityPathPoint {
  double lambda = 0.0;
  StabilityProfile profile;
  Selection selection;
};

/// Stability selection across a λ grid reusing one set of subsamples (the
/// draw depends only on cfg.seed and the iteration index) and warm starts
/// along the grid; element l matches stability_select at grid[l] with the
/// same cfg.
std::vector<StabilityPathPoint> stability_path(const DatasetBundle& data, Selector& selector,
                                               const std::vector<double>& grid,
                                               const StabilityConfig& cfg);

struct CVConfig {
  int folds = 10;       // k
  double decay = 0.98;  // λ_l = decay · λ_{l-1}
  std::uint64_t seed = 0;
};

struct CvPoint {
  double lambda = 0.0;
  double mean_validation_error = 0.0;
};

struct CvResult {
  double chosen_lambda = 0.0;
  Selection selection;
  Eigen::MatrixXd coefficients;  // full-data fit at chosen λ
  std::vector<CvPoint> table;
  bool all_empty = false;  // no λ produced a nonempty selection on any fold
  int invocations = 0;
};

/// Hard cap on the λ grid for the case where the half-the-training-rows
/// cutoff cannot trigger (d well below N/2); 0.98^400 ≈ 3e-4 of λ_max is
/// past every sensible choice.
inline constexpr int kMaxCvGridLength = 400;

/// The fold partition cross_validate uses: indices shuffled from the
/// (seed) stream, cut into k contiguous chunks, remainder spread over the
/// leading folds. Exposed so tests can hand-roll the same folds.
std::vector<std::vector<int>> fold_assignment(Eigen::Index n_samples, int folds,
                                              std::uint64_t seed);

/// k-fold cross-validation over the λ grid with the half-the-training-rows
/// cutoff; validation error from a per-output least-squares refit on the
/// validation fold restricted to the fold's selected support.
CvResult cross_validate(const DatasetBundle& data, Selector& selector, const CVConfig& cfg);
CvResult cross_validate(const DatasetBundle& data, const SubAlgorithm& sub, const CVConfig& cfg);

struct SacConfig {
  int splits = 10;        // I
  int folds = 10;         // k, for the screen-phase CV
  double threshold = 1.0;  // π_SaC, may exceed 1
  std::uint64_t seed = 0;
};

struct SacResult {
  Eigen::MatrixXd p_values;  // d x t combined pseudo-p-values
  Selection selection;
  int invocations = 0;
  int rank_drops = 0;    // predictors dropped from clean regressions
  int truncations = 0;   // screened sets truncated to half the shard rows
};

/// The row order split `split` shuffles the data into: shard 1 is the first
/// ⌊N/2⌋ entries, shard 2 the rest. Exposed so tests can rebuild the shards.
std::vector<int> split_order(Eigen::Index n_samples, const SacConfig& cfg, int split);

/// Screen-and-clean: per split, CV-tuned screen on shard 1 and per-output
/// OLS clean on shard 2; pseudo-p-values are BH-combined across splits and
/// pairs with p ≤ π_SaC are selected.
SacResult screen_and_clean(const DatasetBundle& data, Selector& selector, const SacConfig& cfg);
SacResult screen_and_clean(const DatasetBundle& data, const SubAlgorithm& sub,
                           const SacConfig& cfg);

}  // namespace stabsel::meta
