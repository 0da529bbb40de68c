#include <cmath>
#include <numeric>

#include "stabsel/meta.hpp"
#include "stabsel/rng.hpp"

namespace stabsel::meta {

double SolverSelector::lambda_max(const DatasetBundle& data) {
  return solvers::lambda_max(data, sub_.algorithm, sub_.penalty.l1_weight);
}

solvers::FitReport SolverSelector::fit(const DatasetBundle& data, double lambda,
                                       const Eigen::MatrixXd* warm_start) {
  solvers::PenaltyConfig penalty = sub_.penalty;
  penalty.lambda = lambda;
  solvers::SolverOptions opts;
  opts.warm_start = warm_start;
  return solvers::fit(data, sub_.algorithm, penalty, opts);
}

std::vector<double> StabilityProfile::tau() const {
  std::vector<double> out(counts.size());
  for (size_t k = 0; k < counts.size(); ++k)
    out[k] = static_cast<double>(counts[k]) / static_cast<double>(iterations);
  return out;
}

double StabilityProfile::q_hat() const {
  long long total = std::accumulate(counts.begin(), counts.end(), 0LL);
  return static_cast<double>(total) / static_cast<double>(iterations);
}

namespace {

struct StabilityPlan {
  int subsample_size = 0;
  int count_cutoff = 0;  // counts ≥ cutoff ⟺ τ ≥ π
};

StabilityPlan check_stability_inputs(const DatasetBundle& data, const StabilityConfig& cfg) {
  data.validate();
  if (!(cfg.subsample_fraction > 0.0 && cfg.subsample_fraction < 1.0))
    throw DataError("stability_select: subsample fraction must lie in (0, 1)");
  if (cfg.iterations < 1) throw DataError("stability_select: iterations must be at least 1");
  if (!(cfg.threshold > 0.5 && cfg.threshold <= 1.0))
    throw DataError("stability_select: threshold must lie in (0.5, 1]");
  StabilityPlan plan;
  plan.subsample_size =
      static_cast<int>(std::floor(cfg.subsample_fraction * static_cast<double>(data.shape.n_samples)));
  if (plan.subsample_size < 2)
    throw DataError("stability_select: subsample size floor(p*N) must be at least 2");
  plan.count_cutoff =
      static_cast<int>(std::ceil(cfg.threshold * static_cast<double>(cfg.iterations) - 1e-9));
  return plan;
}

Selection threshold_selection(const StabilityProfile& profile, int cutoff) {
  std::vector<int> flat;
  for (size_t k = 0; k < profile.counts.size(); ++k)
    if (profile.counts[k] >= cutoff) flat.push_back(static_cast<int>(k));
  return Selection::from_flat(profile.shape, std::move(flat));
}

}  // namespace

Selection threshold_profile(const StabilityProfile& profile, double pi) {
  if (!(pi > 0.5 && pi <= 1.0))
    throw DataError("threshold_profile: threshold must lie in (0.5, 1]");
  const int cutoff =
      static_cast<int>(std::ceil(pi * static_cast<double>(profile.iterations) - 1e-9));
  return threshold_selection(profile, cutoff);
}

std::vector<int> subsample_rows(Eigen::Index n_samples, const StabilityConfig& cfg, int iteration) {
  const int size =
      static_cast<int>(std::floor(cfg.subsample_fraction * static_cast<double>(n_samples)));
  Rng rng(derive_seed(cfg.seed, {kStreamSubsample, static_cast<std::uint64_t>(iteration)}));
  return rng.sample_without_replacement(static_cast<int>(n_samples), size);
}

StabilityOutcome stability_select(const DatasetBundle& data, Selector& selector, double lambda,
                                  const StabilityConfig& cfg) {
  auto path = stability_path(data, selector, {lambda}, cfg);
  StabilityOutcome out;
  out.profile = std::move(path[0].profile);
  out.selection = std::move(path[0].selection);
  out.invocations = cfg.iterations;
  return out;
}

StabilityOutcome stability_select(const DatasetBundle& data, const SubAlgorithm& sub,
                                  const StabilityConfig& cfg) {
  SolverSelector selector(sub);
  return stability_select(data, selector, sub.penalty.lambda, cfg);
}

std::vector<StabilityPathPoint> stability_path(const DatasetBundle& data, Selector& selector,
                                               const std::vector<double>& grid,
                                               const StabilityConfig& cfg) {
  const StabilityPlan plan = check_stability_inputs(data, cfg);
  if (grid.empty()) throw DataError("stability_path: empty lambda grid");

  std::vector<StabilityPathPoint> path(grid.size());
  for (size_t l = 0; l < grid.size(); ++l) {
    path[l].lambda = grid[l];
    path[l].profile.shape = data.shape;
    path[l].profile.iterations = cfg.iterations;
    path[l].profile.counts.assign(static_cast<size_t>(data.shape.flat_size()), 0);
  }

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    DatasetBundle sub = data.rows(subsample_rows(data.shape.n_samples, cfg, iter));
    Eigen::MatrixXd warm;
    bool have_warm = false;
    for (size_t l = 0; l < grid.size(); ++l) {
      auto report = selector.fit(sub, grid[l], have_warm ? &warm : nullptr);
      warm = report.coefficients.values;
      have_warm = warm.size() > 0;
      auto& profile = path[l].profile;
      if (!report.converged) {
        ++profile.failures;
        profile.iteration_sizes.push_back(0);
        continue;
      }
      Selection sel = report.coefficients.support();
      for (int f : sel.flat()) ++profile.counts[static_cast<size_t>(f)];
      profile.iteration_sizes.push_back(sel.size());
    }
  }

  for (auto& point : path)
    point.selection = threshold_selection(point.profile, plan.count_cutoff);
  return path;
}

}  // namespace stabsel::meta
