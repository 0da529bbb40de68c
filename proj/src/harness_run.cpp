#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <thread>

#include "stabsel/control.hpp"
#include "stabsel/harness.hpp"
#include "stabsel/io.hpp"
#include "stabsel/meta.hpp"
#include "stabsel/rng.hpp"

namespace stabsel::harness {

namespace {

using nlohmann::json;

const std::set<std::string>& known_regimes() {
  static const std::set<std::string> regimes = {kRegimeBaseline, kRegimeStability, kRegimeSac,
                                                kRegimeCv};
  return regimes;
}

// Filename token per regime; the JSON keeps the full id.
std::string regime_token(const std::string& regime) {
  if (regime == kRegimeSac) return "sac";
  if (regime == kRegimeCv) return "cv";
  return regime;
}

std::string zero_pad(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*d", width, v);
  return buf;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (configs.empty()) throw DataError("ExperimentSpec: no configs");
  for (const auto& cfg : configs) cfg.validate();
  {
    std::set<std::string> names;
    for (const auto& cfg : configs)
      if (!names.insert(cfg.name).second)
        throw DataError("ExperimentSpec: duplicate config name '" + cfg.name + "'");
  }
  if (replicates < 1) throw DataError("ExperimentSpec: replicates must be >= 1");
  if (regimes.empty()) throw DataError("ExperimentSpec: no regimes");
  std::set<std::string> seen;
  for (const auto& r : regimes) {
    if (!known_regimes().count(r)) throw DataError("ExperimentSpec: unknown regime '" + r + "'");
    if (!seen.insert(r).second) throw DataError("ExperimentSpec: duplicate regime '" + r + "'");
  }
  if (seen.count(kRegimeStability)) {
    if (pi_grid.empty()) throw DataError("ExperimentSpec: stability regime needs a pi grid");
    for (double pi : pi_grid)
      if (!(pi > 0.5) || !(pi <= 1.0))
        throw DataError("ExperimentSpec: pi grid values must lie in (0.5, 1]");
  }
  if (seen.count(kRegimeSac)) {
    if (pi_sac_grid.empty()) throw DataError("ExperimentSpec: screen-and-clean needs a pi_sac grid");
    for (double pi : pi_sac_grid)
      if (!(pi > 0)) throw DataError("ExperimentSpec: pi_sac grid values must be positive");
  }
  if (!(l1_weight > 0)) throw DataError("ExperimentSpec: l1_weight must be positive");
  if (output_dir.empty()) throw DataError("ExperimentSpec: output_dir is empty");
  if (stability_iterations < 1) throw DataError("ExperimentSpec: stability_iterations must be >= 1");
  if (!(subsample_fraction > 0) || !(subsample_fraction < 1))
    throw DataError("ExperimentSpec: subsample_fraction must lie in (0, 1)");
  if (cv_folds < 2 || sac_folds < 2) throw DataError("ExperimentSpec: folds must be >= 2");
  if (sac_splits < 1) throw DataError("ExperimentSpec: sac_splits must be >= 1");
  if (!(lambda_decay > 0) || !(lambda_decay < 1))
    throw DataError("ExperimentSpec: lambda_decay must lie in (0, 1)");
  if (max_grid < 1) throw DataError("ExperimentSpec: max_grid must be >= 1");
}

nlohmann::json data_config_to_json(const datagen::DataConfig& cfg) {
  json j;
  j["matrix_type"] = datagen::to_string(cfg.matrix_type);
  j["n_samples"] = cfg.n_samples;
  j["n_inputs"] = cfg.n_inputs;
  j["n_true"] = cfg.n_true;
  j["snr"] = cfg.snr;
  j["algorithm"] = solvers::to_string(cfg.algorithm_target);
  j["seed"] = cfg.seed;
  if (!cfg.external_path.empty()) j["external_path"] = cfg.external_path;
  j["name"] = cfg.name;
  return j;
}

datagen::DataConfig data_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("data config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    static const std::set<std::string> known = {"matrix_type", "n_samples", "n_inputs",
                                                "n_true",      "snr",       "algorithm",
                                                "seed",        "external_path", "name"};
    if (!known.count(key)) throw DataError("data config has unknown key '" + key + "'");
  }
  for (const char* key : {"matrix_type", "n_samples", "n_inputs", "n_true", "algorithm"})
    if (!j.contains(key)) throw DataError(std::string("data config is missing key '") + key + "'");
  datagen::DataConfig cfg;
  cfg.matrix_type = datagen::matrix_type_from_string(j.at("matrix_type").get<std::string>());
  cfg.n_samples = j.at("n_samples").get<Eigen::Index>();
  cfg.n_inputs = j.at("n_inputs").get<int>();
  cfg.n_true = j.at("n_true").get<int>();
  cfg.snr = j.value("snr", 1.0);
  cfg.algorithm_target = solvers::algorithm_from_string(j.at("algorithm").get<std::string>());
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.external_path = j.value("external_path", std::string());
  cfg.name = j.value("name", std::string());
  if (cfg.name.empty()) cfg.name = datagen::default_name(cfg);
  cfg.validate();
  return cfg;
}

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["configs"] = json::array();
  for (const auto& cfg : spec.configs) j["configs"].push_back(data_config_to_json(cfg));
  j["replicates"] = spec.replicates;
  j["regimes"] = spec.regimes;
  j["pi_grid"] = spec.pi_grid;
  j["pi_sac_grid"] = spec.pi_sac_grid;
  j["calibration_target_per_output"] = spec.calibration_target_per_output;
  j["l1_weight"] = spec.l1_weight;
  j["master_seed"] = spec.master_seed;
  j["output_dir"] = spec.output_dir;
  j["stability_iterations"] = spec.stability_iterations;
  j["subsample_fraction"] = spec.subsample_fraction;
  j["cv_folds"] = spec.cv_folds;
  j["sac_splits"] = spec.sac_splits;
  j["sac_folds"] = spec.sac_folds;
  j["lambda_decay"] = spec.lambda_decay;
  j["max_grid"] = spec.max_grid;
  return j;
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("experiment spec must be a JSON object");
  static const std::set<std::string> known = {
      "configs",       "suite",         "replicates",         "regimes",
      "pi_grid",       "pi_sac_grid",   "calibration_target_per_output",
      "l1_weight",     "master_seed",   "output_dir",         "stability_iterations",
      "subsample_fraction", "cv_folds", "sac_splits",         "sac_folds",
      "lambda_decay",  "max_grid"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw DataError("experiment spec has unknown key '" + key + "'");
  }
  ExperimentSpec spec;
  if (j.contains("suite")) {
    const json& suite = j.at("suite");
    for (const auto& [key, value] : suite.items()) {
      (void)value;
      static const std::set<std::string> suite_keys = {"algorithm", "scale", "types"};
      if (!suite_keys.count(key)) throw DataError("suite has unknown key '" + key + "'");
    }
    const auto algorithm = solvers::algorithm_from_string(suite.at("algorithm").get<std::string>());
    const double scale = suite.value("scale", 1.0);
    std::set<std::string> wanted;
    if (suite.contains("types"))
      for (const json& t : suite.at("types")) wanted.insert(t.get<std::string>());
    for (auto& cfg : datagen::config_table(algorithm, scale)) {
      if (cfg.matrix_type == datagen::MatrixType::kExternal) continue;  // need a file path
      if (!wanted.empty() && !wanted.count(datagen::to_string(cfg.matrix_type))) continue;
      spec.configs.push_back(std::move(cfg));
    }
  }
  if (j.contains("configs"))
    for (const json& c : j.at("configs")) spec.configs.push_back(data_config_from_json(c));
  if (j.contains("replicates")) spec.replicates = j.at("replicates").get<int>();
  if (j.contains("regimes")) spec.regimes = j.at("regimes").get<std::vector<std::string>>();
  if (j.contains("pi_grid")) spec.pi_grid = j.at("pi_grid").get<std::vector<double>>();
  if (j.contains("pi_sac_grid"))
    spec.pi_sac_grid = j.at("pi_sac_grid").get<std::vector<double>>();
  if (j.contains("calibration_target_per_output"))
    spec.calibration_target_per_output = j.at("calibration_target_per_output").get<bool>();
  if (j.contains("l1_weight")) spec.l1_weight = j.at("l1_weight").get<double>();
  if (j.contains("master_seed")) spec.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("output_dir")) spec.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("stability_iterations"))
    spec.stability_iterations = j.at("stability_iterations").get<int>();
  if (j.contains("subsample_fraction"))
    spec.subsample_fraction = j.at("subsample_fraction").get<double>();
  if (j.contains("cv_folds")) spec.cv_folds = j.at("cv_folds").get<int>();
  if (j.contains("sac_splits")) spec.sac_splits = j.at("sac_splits").get<int>();
  if (j.contains("sac_folds")) spec.sac_folds = j.at("sac_folds").get<int>();
  if (j.contains("lambda_decay")) spec.lambda_decay = j.at("lambda_decay").get<double>();
  if (j.contains("max_grid")) spec.max_grid = j.at("max_grid").get<int>();
  return spec;
}

namespace {

json pairs_to_json(const std::vector<Pair>& pairs) {
  json arr = json::array();
  for (const Pair& p : pairs) arr.push_back({p.input, p.output});
  return arr;
}

std::vector<Pair> pairs_from_json(const json& arr, const std::string& what) {
  std::vector<Pair> out;
  for (const json& p : arr) {
    if (!p.is_array() || p.size() != 2)
      throw DataError(what + " entries must be [input, output] pairs");
    out.push_back(Pair{p[0].get<int>(), p[1].get<int>()});
  }
  return out;
}

// Hash of the full canonical cell JSON (minus the hash field itself), so a
// resumed store is recomputed after spec drift or file corruption.
std::string cell_hash_of(json cell) {
  cell.erase("cell_hash");
  return io::hex64(io::fnv1a64(cell.dump()));
}

}  // namespace

nlohmann::json cell_to_json(const CellResult& cell) {
  json j;
  j["regime"] = cell.regime;
  json cfg;
  cfg["name"] = cell.config_name;
  cfg["algorithm"] = cell.algorithm;
  cfg["matrix_type"] = cell.matrix_type;
  cfg["replicate"] = cell.replicate;
  cfg["seed"] = cell.seed;
  cfg["n_inputs"] = cell.shape.n_inputs;
  cfg["n_outputs"] = cell.shape.n_outputs;
  cfg["n_samples"] = cell.shape.n_samples;
  cfg["truth_size"] = cell.truth_size;
  j["config"] = std::move(cfg);
  j["truth"] = pairs_to_json(cell.truth);
  j["grid_index"] = cell.grid_index;
  if (std::isfinite(cell.grid_value)) j["grid_value"] = cell.grid_value;
  if (std::isfinite(cell.lambda)) j["lambda"] = cell.lambda;
  if (std::isfinite(cell.q_hat)) j["q_hat"] = cell.q_hat;
  if (!cell.tau_counts.empty()) {
    j["tau_counts"] = cell.tau_counts;
    j["iterations"] = cell.iterations;
  }
  if (cell.p_values.size() > 0) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < cell.p_values.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < cell.p_values.cols(); ++c) row.push_back(cell.p_values(i, c));
      rows.push_back(std::move(row));
    }
    j["p_values"] = std::move(rows);
  }
  j["selection"] = pairs_to_json(cell.selection.pairs());
  if (cell.confusion)
    j["confusion"] = {{"true_positives", cell.confusion->true_positives},
                      {"false_positives", cell.confusion->false_positives}};
  j["invocations"] = cell.invocations;
  j["warnings"] = cell.warnings;
  j["cell_hash"] = cell_hash_of(j);
  return j;
}

CellResult cell_from_json(const nlohmann::json& j) {
  CellResult cell;
  cell.regime = j.at("regime").get<std::string>();
  const json& cfg = j.at("config");
  cell.config_name = cfg.at("name").get<std::string>();
  cell.algorithm = cfg.at("algorithm").get<std::string>();
  cell.matrix_type = cfg.at("matrix_type").get<std::string>();
  cell.replicate = cfg.at("replicate").get<int>();
  cell.seed = cfg.at("seed").get<std::uint64_t>();
  cell.shape.n_inputs = cfg.at("n_inputs").get<int>();
  cell.shape.n_outputs = cfg.at("n_outputs").get<int>();
  cell.shape.n_samples = cfg.at("n_samples").get<Eigen::Index>();
  cell.truth_size = cfg.at("truth_size").get<int>();
  cell.truth = pairs_from_json(j.at("truth"), "truth");
  cell.grid_index = j.at("grid_index").get<int>();
  cell.grid_value = j.contains("grid_value") ? j.at("grid_value").get<double>() : std::nan("");
  cell.lambda = j.contains("lambda") ? j.at("lambda").get<double>() : std::nan("");
  cell.q_hat = j.contains("q_hat") ? j.at("q_hat").get<double>() : std::nan("");
  if (j.contains("tau_counts")) {
    cell.tau_counts = j.at("tau_counts").get<std::vector<int>>();
    cell.iterations = j.at("iterations").get<int>();
  }
  if (j.contains("p_values")) {
    const json& rows = j.at("p_values");
    cell.p_values.resize(cell.shape.n_inputs, cell.shape.n_outputs);
    if (rows.size() != static_cast<std::size_t>(cell.shape.n_inputs))
      throw DataError("cell p_values row count mismatch");
    for (Eigen::Index i = 0; i < cell.p_values.rows(); ++i) {
      const json& row = rows[static_cast<std::size_t>(i)];
      if (row.size() != static_cast<std::size_t>(cell.shape.n_outputs))
        throw DataError("cell p_values column count mismatch");
      for (Eigen::Index c = 0; c < cell.p_values.cols(); ++c)
        cell.p_values(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  cell.selection = Selection::from_pairs(cell.shape, pairs_from_json(j.at("selection"), "selection"));
  if (j.contains("confusion")) {
    ConfusionCounts c;
    c.true_positives = j.at("confusion").at("true_positives").get<int>();
    c.false_positives = j.at("confusion").at("false_positives").get<int>();
    cell.confusion = c;
  }
  cell.invocations = j.at("invocations").get<long long>();
  cell.warnings = j.at("warnings").get<std::vector<std::string>>();
  return cell;
}

namespace {

struct CellProto {
  std::string config_name;
  std::string algorithm;
  std::string matrix_type;
  int replicate = 0;
  std::uint64_t seed = 0;
  ProblemShape shape;
  int truth_size = 0;
  std::vector<Pair> truth;
};

CellResult new_cell(const CellProto& proto, const std::string& regime) {
  CellResult cell;
  cell.regime = regime;
  cell.config_name = proto.config_name;
  cell.algorithm = proto.algorithm;
  cell.matrix_type = proto.matrix_type;
  cell.replicate = proto.replicate;
  cell.seed = proto.seed;
  cell.shape = proto.shape;
  cell.truth_size = proto.truth_size;
  cell.truth = proto.truth;
  cell.grid_value = std::nan("");
  cell.lambda = std::nan("");
  cell.q_hat = std::nan("");
  return cell;
}

void finish_cell(CellResult& cell, const Selection& selection, const std::optional<GroundTruth>& truth) {
  cell.selection = selection;
  if (truth) cell.confusion = confusion(selection, *truth);
}

// Count of above-threshold coefficients in output column j.
int support_in_column(const Eigen::MatrixXd& coef, Eigen::Index j) {
  int n = 0;
  for (Eigen::Index i = 0; i < coef.rows(); ++i)
    if (std::abs(coef(i, j)) >= solvers::kSupportThreshold) ++n;
  return n;
}

std::vector<CellResult> run_baseline(const DatasetBundle& data, const meta::SubAlgorithm& sub,
                                     const ExperimentSpec& spec, const CellProto& proto) {
  meta::SolverSelector selector(sub);
  const double lambda_top = selector.lambda_max(data);
  if (!(lambda_top > 0)) throw DataError("baseline: lambda_max is not positive");
  std::vector<CellResult> cells;
  Eigen::MatrixXd warm;
  bool have_warm = false;
  for (int l = 0; l < spec.max_grid; ++l) {
    const double lambda = lambda_top * std::pow(spec.lambda_decay, l);
    const auto report = selector.fit(data, lambda, have_warm ? &warm : nullptr);
    warm = report.coefficients.values;
    have_warm = true;
    bool cutoff = false;
    for (Eigen::Index j = 0; j < warm.cols() && !cutoff; ++j)
      cutoff = 2 * support_in_column(warm, j) > data.shape.n_samples;
    if (cutoff && l > 0) break;  // the triggering point is excluded, l = 0 always recorded
    CellResult cell = new_cell(proto, kRegimeBaseline);
    cell.grid_index = l;
    cell.grid_value = lambda;
    cell.lambda = lambda;
    cell.invocations = 1;
    if (!report.converged) cell.warnings.push_back("solver did not converge");
    finish_cell(cell, report.coefficients.support(), data.truth);
    cells.push_back(std::move(cell));
    if (cutoff) break;
  }
  return cells;
}

std::vector<CellResult> run_stability(const DatasetBundle& data, const meta::SubAlgorithm& sub,
                                      const ExperimentSpec& spec, const CellProto& proto) {
  meta::SolverSelector inner(sub);
  meta::CountingSelector selector(inner);
  const double lambda_top = selector.lambda_max(data);
  if (!(lambda_top > 0)) throw DataError("stability: lambda_max is not positive");
  std::vector<double> grid(static_cast<std::size_t>(spec.max_grid));
  for (int l = 0; l < spec.max_grid; ++l)
    grid[static_cast<std::size_t>(l)] = lambda_top * std::pow(spec.lambda_decay, l);

  const double k_size = static_cast<double>(data.shape.flat_size());
  const double target = std::sqrt(
      0.8 * k_size * (spec.calibration_target_per_output ? data.shape.n_outputs : 1));

  meta::StabilityConfig cfg;
  cfg.subsample_fraction = spec.subsample_fraction;
  cfg.iterations = spec.stability_iterations;
  cfg.threshold = spec.pi_grid.front();
  cfg.seed = proto.seed;
  const auto calib = control::calibrate_lambda(data, selector, target, grid, cfg);

  std::vector<CellResult> cells;
  for (std::size_t gi = 0; gi < spec.pi_grid.size(); ++gi) {
    const double pi = spec.pi_grid[gi];
    CellResult cell = new_cell(proto, kRegimeStability);
    cell.grid_index = static_cast<int>(gi);
    cell.grid_value = pi;
    cell.lambda = calib.lambda;
    cell.q_hat = calib.profile.q_hat();
    cell.tau_counts = calib.profile.counts;
    cell.iterations = calib.profile.iterations;
    cell.invocations = selector.count();  // calibration total, shared by every pi cell
    if (!calib.reached_target)
      cell.warnings.push_back("calibration: q_hat never crossed the target; using the last grid lambda");
    if (calib.profile.failures > 0)
      cell.warnings.push_back(std::to_string(calib.profile.failures) +
                              " subsample fits did not converge");
    finish_cell(cell, meta::threshold_profile(calib.profile, pi), data.truth);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<CellResult> run_sac(const DatasetBundle& data, const meta::SubAlgorithm& sub,
                                const ExperimentSpec& spec, const CellProto& proto) {
  meta::SacConfig cfg;
  cfg.splits = spec.sac_splits;
  cfg.folds = spec.sac_folds;
  cfg.threshold = *std::max_element(spec.pi_sac_grid.begin(), spec.pi_sac_grid.end());
  cfg.seed = proto.seed;
  const auto result = meta::screen_and_clean(data, sub, cfg);

  std::vector<CellResult> cells;
  for (std::size_t gi = 0; gi < spec.pi_sac_grid.size(); ++gi) {
    const double pi = spec.pi_sac_grid[gi];
    CellResult cell = new_cell(proto, kRegimeSac);
    cell.grid_index = static_cast<int>(gi);
    cell.grid_value = pi;
    cell.p_values = result.p_values;
    cell.invocations = result.invocations;
    if (result.truncations > 0)
      cell.warnings.push_back(std::to_string(result.truncations) +
                              " screened sets truncated to half the clean shard");
    if (result.rank_drops > 0)
      cell.warnings.push_back(std::to_string(result.rank_drops) +
                              " predictors dropped from rank-deficient clean fits");
    finish_cell(cell, control::sac_threshold(data.shape, result.p_values, pi), data.truth);
    cells.push_back(std::move(cell));
  }
  return cells;
}

CellResult run_cv(const DatasetBundle& data, const meta::SubAlgorithm& sub,
                  const ExperimentSpec& spec, const CellProto& proto) {
  meta::CVConfig cfg;
  cfg.folds = spec.cv_folds;
  cfg.decay = spec.lambda_decay;
  cfg.seed = proto.seed;
  const auto result = meta::cross_validate(data, sub, cfg);
  CellResult cell = new_cell(proto, kRegimeCv);
  cell.grid_index = 0;
  cell.lambda = result.chosen_lambda;
  cell.invocations = result.invocations;
  if (result.all_empty)
    cell.warnings.push_back("cross-validation: every grid point selected empty on all folds");
  finish_cell(cell, result.selection, data.truth);
  return cell;
}

struct JobPaths {
  std::filesystem::path cells;
  std::filesystem::path jobs;
};

std::string job_stem(const std::string& config_name, int replicate) {
  return config_name + "__r" + zero_pad(replicate, 3);
}

std::string job_key(const ExperimentSpec& spec, const datagen::DataConfig& cfg, int replicate,
                    std::uint64_t replicate_seed) {
  json id;
  id["config"] = data_config_to_json(cfg);
  id["replicate"] = replicate;
  id["replicate_seed"] = replicate_seed;
  id["master_seed"] = spec.master_seed;
  id["regimes"] = spec.regimes;
  id["pi_grid"] = spec.pi_grid;
  id["pi_sac_grid"] = spec.pi_sac_grid;
  id["calibration_target_per_output"] = spec.calibration_target_per_output;
  id["l1_weight"] = spec.l1_weight;
  id["stability_iterations"] = spec.stability_iterations;
  id["subsample_fraction"] = spec.subsample_fraction;
  id["cv_folds"] = spec.cv_folds;
  id["sac_splits"] = spec.sac_splits;
  id["sac_folds"] = spec.sac_folds;
  id["lambda_decay"] = spec.lambda_decay;
  id["max_grid"] = spec.max_grid;
  return io::hex64(io::fnv1a64(id.dump()));
}

// A job is complete when its marker matches the current parameters and
// every listed cell file still verifies by its embedded identity hash.
bool job_complete(const JobPaths& paths, const std::string& stem, const std::string& key,
                  long long* n_cells) {
  const auto marker_path = paths.jobs / (stem + ".json");
  if (!std::filesystem::exists(marker_path)) return false;
  json marker;
  try {
    marker = io::load_json_file(marker_path);
    if (marker.at("job_key").get<std::string>() != key) return false;
    const auto& files = marker.at("files");
    for (const json& f : files) {
      const auto cell_path = paths.cells / f.get<std::string>();
      const json cell = io::load_json_file(cell_path);
      if (cell.at("cell_hash").get<std::string>() != cell_hash_of(cell)) return false;
    }
    *n_cells = static_cast<long long>(files.size());
    return true;
  } catch (const std::exception&) {
    return false;  // unreadable marker or cell: recompute the job
  }
}

struct JobOutcome {
  long long written = 0;
  long long skipped = 0;
  long long failed = 0;
  std::vector<std::string> failures;
};

JobOutcome run_job(const ExperimentSpec& spec, std::size_t config_index, int replicate,
                   const JobPaths& paths) {
  JobOutcome outcome;
  datagen::DataConfig cfg = spec.configs[config_index];
  cfg.seed = derive_seed(spec.master_seed, {kStreamReplicate, static_cast<std::uint64_t>(config_index),
                                            static_cast<std::uint64_t>(replicate)});
  const std::string stem = job_stem(cfg.name, replicate);
  const std::string key = job_key(spec, cfg, replicate, cfg.seed);
  long long existing = 0;
  if (job_complete(paths, stem, key, &existing)) {
    outcome.skipped = existing;
    return outcome;
  }

  DatasetBundle data;
  try {
    data = datagen::make_dataset(cfg);
  } catch (const std::exception& e) {
    outcome.failed = static_cast<long long>(spec.regimes.size());
    outcome.failures.push_back(stem + ": data generation failed: " + e.what());
    return outcome;
  }

  meta::SubAlgorithm sub;
  sub.algorithm = cfg.algorithm_target;
  sub.penalty.l1_weight =
      cfg.algorithm_target == solvers::AlgorithmId::kSiol ? spec.l1_weight : 1.0;

  CellProto proto;
  proto.config_name = cfg.name;
  proto.algorithm = solvers::to_string(cfg.algorithm_target);
  proto.matrix_type = datagen::to_string(cfg.matrix_type);
  proto.replicate = replicate;
  proto.seed = cfg.seed;
  proto.shape = data.shape;
  proto.truth_size = data.truth ? data.truth->positives().size() : 0;
  if (data.truth) proto.truth = data.truth->positives().pairs();

  std::vector<std::string> files;
  bool any_failed = false;
  for (const std::string& regime : spec.regimes) {
    try {
      std::vector<CellResult> cells;
      if (regime == kRegimeBaseline)
        cells = run_baseline(data, sub, spec, proto);
      else if (regime == kRegimeStability)
        cells = run_stability(data, sub, spec, proto);
      else if (regime == kRegimeSac)
        cells = run_sac(data, sub, spec, proto);
      else
        cells = {run_cv(data, sub, spec, proto)};
      for (const CellResult& cell : cells) {
        const std::string name =
            stem + "__" + regime_token(regime) + "__g" + zero_pad(cell.grid_index, 3) + ".json";
        io::save_json_file(paths.cells / name, cell_to_json(cell));
        files.push_back(name);
        ++outcome.written;
      }
    } catch (const std::exception& e) {
      any_failed = true;
      ++outcome.failed;
      const std::string message = stem + " " + regime + ": " + e.what();
      outcome.failures.push_back(message);
      io::save_json_file(paths.cells / (stem + "__" + regime_token(regime) + ".error.json"),
                         json{{"error", message}});
    }
  }
  if (!any_failed) {
    json marker;
    marker["job_key"] = key;
    marker["files"] = files;
    io::save_json_file(paths.jobs / (stem + ".json"), marker);
  }
  return outcome;
}

}  // namespace

RunSummary run_experiment(const ExperimentSpec& spec, int workers) {
  spec.validate();
  const std::filesystem::path out(spec.output_dir);
  JobPaths paths{out / "cells", out / "jobs"};
  std::filesystem::create_directories(paths.cells);
  std::filesystem::create_directories(paths.jobs);
  io::save_json_file(out / "manifest.json", spec_to_json(spec));

  struct Job {
    std::size_t config_index;
    int replicate;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < spec.configs.size(); ++c)
    for (int r = 0; r < spec.replicates; ++r) jobs.push_back({c, r});

  RunSummary summary;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  const int n_workers = std::clamp(workers, 1, 64);
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      JobOutcome outcome = run_job(spec, jobs[i].config_index, jobs[i].replicate, paths);
      std::lock_guard<std::mutex> lock(mutex);
      summary.written += outcome.written;
      summary.skipped += outcome.skipped;
      summary.failed += outcome.failed;
      for (auto& f : outcome.failures) summary.failures.push_back(std::move(f));
    }
  };
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::sort(summary.failures.begin(), summary.failures.end());
  return summary;
}

std::vector<CellResult> load_store(const std::filesystem::path& dir) {
  const std::filesystem::path cells_dir = dir / "cells";
  if (!std::filesystem::is_directory(cells_dir))
    throw DataError("no cells directory under " + dir.string());
  std::vector<CellResult> cells;
  for (const auto& entry : std::filesystem::directory_iterator(cells_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".json") continue;
    if (name.size() > 11 && name.substr(name.size() - 11) == ".error.json") continue;
    cells.push_back(cell_from_json(io::load_json_file(entry.path())));
  }
  std::sort(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.config_name, a.regime, a.replicate, a.grid_index) <
           std::tie(b.config_name, b.regime, b.replicate, b.grid_index);
  });
  return cells;
}

}  // namespace stabsel::harness
