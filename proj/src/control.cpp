#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stabsel/control.hpp"

namespace stabsel::control {

double nfp_bound(double q_hat, int k_size, double pi) {
  if (!(q_hat >= 0.0)) throw std::invalid_argument("nfp_bound: q_hat must be non-negative");
  if (k_size < 1) throw std::invalid_argument("nfp_bound: k_size must be at least 1");
  if (!(pi > 0.5 && pi <= 1.0))
    throw std::invalid_argument("nfp_bound: pi must lie in (0.5, 1]");
  return q_hat * q_hat / (static_cast<double>(k_size) * (2.0 * pi - 1.0));
}

double pi_for_bound(double q_hat, int k_size, double target) {
  if (!(q_hat >= 0.0)) throw std::invalid_argument("pi_for_bound: q_hat must be non-negative");
  if (k_size < 1) throw std::invalid_argument("pi_for_bound: k_size must be at least 1");
  if (!(target > 0.0)) throw std::invalid_argument("pi_for_bound: target must be positive");
  return 0.5 * (q_hat * q_hat / (static_cast<double>(k_size) * target) + 1.0);
}

StabilityPathDriver::StabilityPathDriver(const DatasetBundle& data, meta::Selector& selector,
                                         const meta::StabilityConfig& cfg)
    : shape_(data.shape), selector_(selector), cfg_(cfg) {
  data.validate();
  subsamples_.reserve(static_cast<size_t>(cfg.iterations));
  for (int iter = 0; iter < cfg.iterations; ++iter)
    subsamples_.push_back(data.rows(meta::subsample_rows(data.shape.n_samples, cfg, iter)));
  warm_.resize(static_cast<size_t>(cfg.iterations));
}

meta::StabilityProfile StabilityPathDriver::evaluate(size_t, double lambda) {
  meta::StabilityProfile profile;
  profile.shape = shape_;
  profile.iterations = cfg_.iterations;
  profile.counts.assign(static_cast<size_t>(shape_.flat_size()), 0);
  for (size_t iter = 0; iter < subsamples_.size(); ++iter) {
    auto report =
        selector_.fit(subsamples_[iter], lambda, warm_[iter].size() > 0 ? &warm_[iter] : nullptr);
    warm_[iter] = report.coefficients.values;
    if (!report.converged) {
      ++profile.failures;
      profile.iteration_sizes.push_back(0);
      continue;
    }
    Selection sel = report.coefficients.support();
    for (int f : sel.flat()) ++profile.counts[static_cast<size_t>(f)];
    profile.iteration_sizes.push_back(sel.size());
  }
  return profile;
}

CalibrationResult calibrate_lambda(QHatDriver& driver, double target,
                                   const std::vector<double>& grid) {
  if (grid.empty()) throw DataError("calibrate_lambda: empty grid");
  for (size_t l = 1; l < grid.size(); ++l)
    if (!(grid[l] < grid[l - 1]))
      throw DataError("calibrate_lambda: grid must be strictly descending");
  if (!(target >= 0.0)) throw DataError("calibrate_lambda: target must be non-negative");

  CalibrationResult result;
  for (size_t l = 0; l < grid.size(); ++l) {
    result.profile = driver.evaluate(l, grid[l]);
    result.lambda = grid[l];
    result.grid_index = l;
    if (result.profile.q_hat() > target) {
      result.reached_target = true;
      return result;
    }
  }
  return result;  // last grid point, reached_target = false
}

CalibrationResult calibrate_lambda(const DatasetBundle& data, meta::Selector& selector,
                                   double target, const std::vector<double>& grid,
                                   const meta::StabilityConfig& cfg) {
  StabilityPathDriver driver(data, selector, cfg);
  return calibrate_lambda(driver, target, grid);
}

Selection sac_threshold(const ProblemShape& shape, const Eigen::MatrixXd& p_values,
                        double pi_sac) {
  std::vector<int> flat;
  for (Eigen::Index j = 0; j < p_values.cols(); ++j)
    for (Eigen::Index i = 0; i < p_values.rows(); ++i)
      if (p_values(i, j) <= pi_sac)
        flat.push_back(static_cast<int>(i + p_values.rows() * j));
  return Selection::from_flat(shape, std::move(flat));
}

namespace {

struct Scored {
  ChoiceCandidate candidate;
  Selection selection;
};

// Grid-order deterministic argmax: score desc, |S| asc, λ desc, π desc.
bool better(const Scored& a, const Scored& b) {
  if (a.candidate.score != b.candidate.score) return a.candidate.score > b.candidate.score;
  if (a.candidate.size != b.candidate.size) return a.candidate.size < b.candidate.size;
  const double la = std::isnan(a.candidate.lambda) ? 0.0 : a.candidate.lambda;
  const double lb = std::isnan(b.candidate.lambda) ? 0.0 : b.candidate.lambda;
  if (la != lb) return la > lb;
  return a.candidate.pi > b.candidate.pi;
}

}  // namespace

ChoiceResult model_choice(const DatasetBundle& data, meta::Selector& selector, ChoiceRegime regime,
                          const ObjectiveSpec& objective, const ChoiceGrids& grids,
                          const meta::StabilityConfig& stability_cfg,
                          const meta::SacConfig& sac_cfg) {
  if (grids.pis.empty()) throw DataError("model_choice: empty threshold grid");
  const int k_size = data.shape.flat_size();

  ChoiceResult result;
  std::vector<Scored> scored;

  auto score_stability = [&](double lambda, const meta::StabilityProfile& profile) {
    for (double pi : grids.pis) {
      Scored entry;
      entry.selection = meta::threshold_profile(profile, pi);
      entry.candidate.lambda = lambda;
      entry.candidate.pi = pi;
      entry.candidate.size = entry.selection.size();
      entry.candidate.v_hat = nfp_bound(profile.q_hat(), k_size, pi);
      entry.candidate.score = objective.evaluate(
          static_cast<double>(entry.candidate.size) - entry.candidate.v_hat,
          entry.candidate.v_hat);
      scored.push_back(std::move(entry));
    }
  };

  switch (regime) {
    case ChoiceRegime::kStabilityFixedLambda: {
      if (grids.lambdas.empty()) throw DataError("model_choice: empty lambda grid");
      auto calibration =
          calibrate_lambda(data, selector, grids.calibration_target, grids.lambdas, stability_cfg);
      result.calibration_warning = !calibration.reached_target;
      score_stability(calibration.lambda, calibration.profile);
      break;
    }
    case ChoiceRegime::kStabilityJoint: {
      if (grids.lambdas.empty()) throw DataError("model_choice: empty lambda grid");
      StabilityPathDriver driver(data, selector, stability_cfg);
      for (size_t l = 0; l < grids.lambdas.size(); ++l)
        score_stability(grids.lambdas[l], driver.evaluate(l, grids.lambdas[l]));
      break;
    }
    case ChoiceRegime::kScreenAndClean: {
      auto sac = meta::screen_and_clean(data, selector, sac_cfg);
      for (double pi : grids.pis) {
        Scored entry;
        entry.selection = sac_threshold(data.shape, sac.p_values, pi);
        entry.candidate.pi = pi;
        entry.candidate.size = entry.selection.size();
        entry.candidate.v_hat = pi;
        entry.candidate.score = objective.evaluate(
            static_cast<double>(entry.candidate.size) - pi, pi);
        scored.push_back(std::move(entry));
      }
      break;
    }
  }

  size_t best = 0;
  for (size_t c = 1; c < scored.size(); ++c)
    if (better(scored[c], scored[best])) best = c;

  result.lambda = scored[best].candidate.lambda;
  result.pi = scored[best].candidate.pi;
  result.selection = scored[best].selection;
  result.v_hat = scored[best].candidate.v_hat;
  result.t_hat = static_cast<double>(scored[best].candidate.size) - result.v_hat;
  result.score = scored[best].candidate.score;
  result.candidates.reserve(scored.size());
  for (auto& entry : scored) result.candidates.push_back(entry.candidate);
  return result;
}

ChoiceResult model_choice(const DatasetBundle& data, const meta::SubAlgorithm& sub,
                          ChoiceRegime regime, const ObjectiveSpec& objective,
                          const ChoiceGrids& grids, const meta::StabilityConfig& stability_cfg,
                          const meta::SacConfig& sac_cfg) {
  meta::SolverSelector selector(sub);
  return model_choice(data, selector, regime, objective, grids, stability_cfg, sac_cfg);
}

}  // namespace stabsel::control
