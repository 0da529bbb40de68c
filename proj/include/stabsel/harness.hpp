#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stabsel/datagen.hpp"
#include "stabsel/types.hpp"

namespace stabsel::harness {

inline constexpr const char* kRegimeBaseline = "baseline";
inline constexpr const char* kRegimeStability = "stability";
inline constexpr const char* kRegimeSac = "screen-and-clean";
inline constexpr const char* kRegimeCv = "cross-validation";

struct ExperimentSpec {
  std::vector<datagen::DataConfig> configs;
  int replicates = 20;
  std::vector<std::string> regimes = {kRegimeBaseline, kRegimeStability};
  std::vector<double> pi_grid = {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
  std::vector<double> pi_sac_grid = {0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0};
  /// false: q̂ target √(0.8|K|); true: √(0.8|K|t).
  bool calibration_target_per_output = false;
  double l1_weight = 2.0;  // SIOL w
  std::uint64_t master_seed = 1;
  std::string output_dir;

  int stability_iterations = 50;  // desk default; benchmark runs use I = 100
  double subsample_fraction = 0.5;
  int cv_folds = 10;
  int sac_splits = 10;
  int sac_folds = 10;
  double lambda_decay = 0.98;
  int max_grid = 400;

  void validate() const;
};

nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);

nlohmann::json data_config_to_json(const datagen::DataConfig& cfg);
datagen::DataConfig data_config_from_json(const nlohmann::json& j);

/// One persisted RegimeResult: the outcome of one regime at one grid point
/// for one (config, replicate). Cells are self-contained: the truth and the
/// stability counts ride along so re-thresholding and aggregation never
/// need the dataset again.
struct CellResult {
  std::string regime;
  std::string config_name;
  std::string algorithm;
  std::string matrix_type;
  int replicate = 0;
  std::uint64_t seed = 0;  // replicate seed the dataset was generated from
  ProblemShape shape;
  int truth_size = 0;
  std::vector<Pair> truth;

  int grid_index = 0;
  double grid_value = 0.0;  // λ (baseline), π (stability), π_SaC; unused for CV
  double lambda = 0.0;      // fixed / chosen λ (NaN for screen-and-clean)
  double q_hat = 0.0;       // stability only
  std::vector<int> tau_counts;  // stability only, per flat element
  int iterations = 0;           // stability only, I
  Eigen::MatrixXd p_values;     // screen-and-clean only, d×t

  Selection selection;
  std::optional<ConfusionCounts> confusion;
  long long invocations = 0;  // sub-algorithm fits behind this result (shared
                              // work is echoed on every cell of the regime)
  std::vector<std::string> warnings;
};

nlohmann::json cell_to_json(const CellResult& cell);
CellResult cell_from_json(const nlohmann::json& j);

struct RunSummary {
  long long written = 0;
  long long skipped = 0;   // cells found complete and left untouched
  long long failed = 0;    // (config, replicate, regime) jobs that threw
  std::vector<std::string> failures;
  bool all_failed() const { return written + skipped == 0 && failed > 0; }
};

/// Runs every (config, replicate, regime) cell into output_dir/cells, one
/// JSON per grid point, resumable: jobs whose marker and cell files verify
/// by content hash are skipped outright. `workers` bounds the thread pool.
RunSummary run_experiment(const ExperimentSpec& spec, int workers = 1);

/// All cells in a store, any order. Skips marker and error files.
std::vector<CellResult> load_store(const std::filesystem::path& dir);

struct PowerMetricConfig {
  double gamma = 0.4;  // in (0, 1]
};

struct RocPoint {
  int v_level = 0;
  double mean_ntp = 0.0;
  double relative = 0.0;  // vs 0.5·(regime + baseline); NaN without baseline
  bool degenerate = false;  // both curves zero; relative pinned to 1.0
};

struct RocCurve {
  std::vector<RocPoint> points;  // v_level = 0..max_v
  bool missing_baseline = false;
};

/// Curves for one config+regime. Per replicate, NTP at level V is the best
/// NTP over grid points with at most V false positives; levels average over
/// replicates before normalizing.
RocCurve roc_curve(const std::vector<CellResult>& regime_cells,
                   const std::vector<CellResult>& baseline_cells, int max_v = 20);

struct ErrorControlRow {
  std::string regime;
  std::string algorithm;
  std::string matrix_type;
  double target = 0.0;  // B̂ (stability) or π_SaC (screen-and-clean)
  double mean_v = 0.0;
  double p_within = 0.0;  // P[V ≤ target]
  bool clamped = false;   // some replicate needed π clamped into (0.5, 1]
  int n = 0;              // (config, replicate) pairs aggregated
};

/// Stability cells are re-thresholded at π = (q̂²/(|K|·target) + 1)/2 per
/// replicate; screen-and-clean cells at p ≤ target. Rows group by
/// (regime, algorithm, matrix type) × target.
std::vector<ErrorControlRow> error_control_table(const std::vector<CellResult>& cells,
                                                 const std::vector<double>& targets);

/// Fraction of replicates where some grid point reaches T ≥ ⌈γ·s⌉ with
/// V = 0. Cells must share one config+regime.
double gamma_power(const std::vector<CellResult>& regime_cells, const PowerMetricConfig& cfg);

struct ModelChoiceRow {
  std::string regime;
  std::string algorithm;
  double mean_t_proxy = 0.0;
  double mean_v_proxy = 0.0;
  double mean_t_oracle = 0.0;  // argmax of T − V over the same grid
  double mean_v_oracle = 0.0;
  int n = 0;
};

/// Proxied argmax (|S| − 2B̂ for stability, |S| − 2π for screen-and-clean)
/// against the oracle argmax of T − V on the same grid; the
/// cross-validation row pairs its single selection with the baseline
/// oracle. Rows group by (regime, algorithm).
std::vector<ModelChoiceRow> model_choice_table(const std::vector<CellResult>& cells);

// CSV emitters for the report subcommand; headered, 6 significant digits.
std::string csv_roc(const std::vector<CellResult>& cells, int max_v = 20);
std::string csv_error_control(const std::vector<CellResult>& cells,
                              const std::vector<double>& targets);
std::string csv_model_choice(const std::vector<CellResult>& cells);
std::string csv_gamma_power(const std::vector<CellResult>& cells,
                            const std::vector<double>& gammas);

}  // namespace stabsel::harness
