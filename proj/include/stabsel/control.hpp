#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "stabsel/meta.hpp"
#include "stabsel/types.hpp"

namespace stabsel::control {

/// NFP bound B̂ = q̂²/(|K|(2π − 1)). π ≤ 0.5 is an error (denominator).
double nfp_bound(double q_hat, int k_size, double pi);

/// Inverse of nfp_bound in π: the threshold at which B̂ equals `target`,
/// π = (q̂²/(|K|·target) + 1)/2. May exceed 1 (target below the π = 1
/// bound); callers clamp.
double pi_for_bound(double q_hat, int k_size, double target);

struct ObjectiveSpec {
  /// v(T̂, V̂); the default v(T, V) = T − V gives the |S| − 2B̂ proxy.
  std::function<double(double t_hat, double v_hat)> evaluate =
      [](double t_hat, double v_hat) { return t_hat - v_hat; };
};

/// Produces the stability profile at successive grid positions; the
/// production driver reuses one family of subsample index sets across the
/// whole grid and warm-starts along it. Tests inject scripted profiles.
class QHatDriver {
 public:
  virtual ~QHatDriver() = default;
  virtual meta::StabilityProfile evaluate(size_t index, double lambda) = 0;
};

class StabilityPathDriver : public QHatDriver {
 public:
  StabilityPathDriver(const DatasetBundle& data, meta::Selector& selector,
                      const meta::StabilityConfig& cfg);
  meta::StabilityProfile evaluate(size_t index, double lambda) override;

 private:
  ProblemShape shape_;
  meta::Selector& selector_;
  meta::StabilityConfig cfg_;
  std::vector<DatasetBundle> subsamples_;
  std::vector<Eigen::MatrixXd> warm_;
};

struct CalibrationResult {
  double lambda = 0.0;
  size_t grid_index = 0;
  meta::StabilityProfile profile;  // at the returned λ
  bool reached_target = false;
};

/// Walks the descending grid and stops at the first λ with q̂ > target; if
/// none qualifies, returns the last grid λ with reached_target = false.
CalibrationResult calibrate_lambda(QHatDriver& driver, double target,
                                   const std::vector<double>& grid);
CalibrationResult calibrate_lambda(const DatasetBundle& data, meta::Selector& selector,
                                   double target, const std::vector<double>& grid,
                                   const meta::StabilityConfig& cfg);

enum class ChoiceRegime { kStabilityFixedLambda, kStabilityJoint, kScreenAndClean };

struct ChoiceGrids {
  std::vector<double> lambdas;       // stability regimes; descending
  std::vector<double> pis;           // π (stability) or π_SaC grid
  double calibration_target = 0.0;   // stability-fixed-λ only
};

struct ChoiceCandidate {
  double lambda = std::nan("");
  double pi = 0.0;
  int size = 0;
  double v_hat = 0.0;
  double score = 0.0;
};

struct ChoiceResult {
  double lambda = std::nan("");  // NaN for screen-and-clean
  double pi = 0.0;
  Selection selection;
  double t_hat = 0.0;  // |S| − V̂
  double v_hat = 0.0;  // B̂ (stability) or π_SaC
  double score = 0.0;
  bool calibration_warning = false;
  std::vector<ChoiceCandidate> candidates;  // grid order
};

/// Maximizes objective(|S| − V̂, V̂) over the regime's grid. Ties break
/// toward smaller |S|, then larger λ, then larger π.
ChoiceResult model_choice(const DatasetBundle& data, meta::Selector& selector, ChoiceRegime regime,
                          const ObjectiveSpec& objective, const ChoiceGrids& grids,
                          const meta::StabilityConfig& stability_cfg,
                          const meta::SacConfig& sac_cfg);
ChoiceResult model_choice(const DatasetBundle& data, const meta::SubAlgorithm& sub,
                          ChoiceRegime regime, const ObjectiveSpec& objective,
                          const ChoiceGrids& grids, const meta::StabilityConfig& stability_cfg,
                          const meta::SacConfig& sac_cfg);

/// Selection at a pseudo-p threshold from a screen-and-clean p-value matrix.
Selection sac_threshold(const ProblemShape& shape, const Eigen::MatrixXd& p_values, double pi_sac);

}  // namespace stabsel::control
