#include "stabsel/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "stabsel/io.hpp"
#include "stabsel/rng.hpp"

namespace stabsel::datagen {

std::string to_string(MatrixType type) {
  switch (type) {
    case MatrixType::kA: return "A";
    case MatrixType::kB: return "B";
    case MatrixType::kC: return "C";
    case MatrixType::kD: return "D";
    case MatrixType::kE: return "E";
    case MatrixType::kExternal: return "external";
  }
  throw std::logic_error("unknown MatrixType");
}

MatrixType matrix_type_from_string(const std::string& name) {
  if (name == "A") return MatrixType::kA;
  if (name == "B") return MatrixType::kB;
  if (name == "C") return MatrixType::kC;
  if (name == "D") return MatrixType::kD;
  if (name == "E") return MatrixType::kE;
  if (name == "external") return MatrixType::kExternal;
  throw DataError("unknown design matrix type '" + name + "' (expected A..E or external)");
}

void DataConfig::validate() const {
  using solvers::AlgorithmId;
  if (n_inputs < 1) throw DataError("DataConfig: n_inputs must be >= 1");
  if (n_samples < 2) throw DataError("DataConfig: n_samples must be >= 2");
  if (n_true < 1) throw DataError("DataConfig: n_true must be >= 1");
  if (!(snr > 0) || !std::isfinite(snr)) throw DataError("DataConfig: snr must be positive");
  if (matrix_type == MatrixType::kB && n_inputs % 10 != 0)
    throw DataError("DataConfig: type B needs n_inputs divisible by 10");
  if (matrix_type == MatrixType::kExternal && external_path.empty())
    throw DataError("DataConfig: external design needs a file path");
  switch (algorithm_target) {
    case AlgorithmId::kLasso:
      if (n_true > n_inputs) throw DataError("DataConfig: n_true exceeds n_inputs");
      break;
    case AlgorithmId::kGroupLasso:
      if (n_inputs % 4 != 0) throw DataError("DataConfig: group lasso needs n_inputs divisible by 4");
      if (n_true % 4 != 0) throw DataError("DataConfig: group lasso needs n_true divisible by 4");
      if (n_true > n_inputs) throw DataError("DataConfig: n_true exceeds n_inputs");
      break;
    case AlgorithmId::kSiol: {
      const int n_groups = (n_inputs + 4) / 5;
      if (n_true > n_groups)
        throw DataError("DataConfig: n_true exceeds the " + std::to_string(n_groups) +
                        " SIOL input groups");
      break;
    }
  }
}

namespace {

Eigen::MatrixXd factor_design(Rng& rng, Eigen::Index n, int d, int n_factors) {
  Eigen::MatrixXd factors(n, n_factors);
  rng.fill_normal(factors);
  Eigen::MatrixXd loadings(n_factors, d);
  rng.fill_normal(loadings);
  Eigen::MatrixXd noise(n, d);
  rng.fill_normal(noise);
  noise.noalias() += factors * loadings;
  return noise;
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

int scaled_count(int v, double scale, int multiple) {
  const double target = static_cast<double>(v) * scale / multiple;
  const int units = std::max(1, static_cast<int>(std::llround(target)));
  return units * multiple;
}

Eigen::MatrixXd load_external_design(const DataConfig& cfg) {
  const io::CsvShape shape = io::read_shape_sidecar(cfg.external_path + ".shape.json");
  Eigen::MatrixXd x = io::load_matrix_csv(cfg.external_path, shape.rows, shape.cols);
  if (x.rows() != cfg.n_samples || x.cols() != cfg.n_inputs)
    throw DataError("external design " + cfg.external_path + " is " + std::to_string(x.rows()) + "x" +
                    std::to_string(x.cols()) + ", config expects " + std::to_string(cfg.n_samples) +
                    "x" + std::to_string(cfg.n_inputs));
  return x;
}

}  // namespace

Eigen::MatrixXd gen_design(const DataConfig& cfg) {
  cfg.validate();
  if (cfg.matrix_type == MatrixType::kExternal) return load_external_design(cfg);

  Rng rng(derive_seed(cfg.seed, {kStreamDesign}));
  const Eigen::Index n = cfg.n_samples;
  const int d = cfg.n_inputs;
  switch (cfg.matrix_type) {
    case MatrixType::kA: {
      Eigen::MatrixXd x(n, d);
      rng.fill_normal(x);
      return x;
    }
    case MatrixType::kB: {
      // Shared block factors drawn first, then the idiosyncratic part:
      // x_j = sqrt(0.5) u_{b(j)} + sqrt(0.5) e_j gives correlation 0.5
      // inside each of the 10 blocks and 0 across.
      Eigen::MatrixXd shared(n, 10);
      rng.fill_normal(shared);
      Eigen::MatrixXd x(n, d);
      rng.fill_normal(x);
      const int block = d / 10;
      const double w = std::sqrt(0.5);
      for (int j = 0; j < d; ++j) x.col(j) = w * shared.col(j / block) + w * x.col(j);
      return x;
    }
    case MatrixType::kC: {
      // AR(1) walk across columns; stationary, so cov(x_i, x_j) = 0.99^|i-j|.
      Eigen::MatrixXd x(n, d);
      rng.fill_normal(x);
      const double scale = std::sqrt(1.0 - 0.99 * 0.99);
      for (int j = 1; j < d; ++j) x.col(j) = 0.99 * x.col(j - 1) + scale * x.col(j);
      return x;
    }
    case MatrixType::kD: return factor_design(rng, n, d, 2);
    case MatrixType::kE: return factor_design(rng, n, d, 10);
    case MatrixType::kExternal: break;  // handled above
  }
  throw std::logic_error("unknown MatrixType");
}

GroupStructure gen_groups(const DataConfig& cfg) {
  cfg.validate();
  GroupStructure groups;
  switch (cfg.algorithm_target) {
    case solvers::AlgorithmId::kLasso: break;
    case solvers::AlgorithmId::kGroupLasso: {
      for (int g = 0; g < cfg.n_inputs / 4; ++g) {
        groups.input_groups.push_back({4 * g, 4 * g + 1, 4 * g + 2, 4 * g + 3});
        groups.input_weights.push_back(1.0);
      }
      break;
    }
    case solvers::AlgorithmId::kSiol: {
      const int d = cfg.n_inputs;
      const int n_groups = (d + 4) / 5;
      for (int i = 1; i <= n_groups; ++i) {
        const int lo = std::max(5 * (i - 1), 1);
        const int hi = std::min(5 * i + 1, d);
        std::vector<int> members;
        for (int v = lo; v <= hi; ++v) members.push_back(v - 1);
        groups.input_weights.push_back(std::sqrt(static_cast<double>(members.size())));
        groups.input_groups.push_back(std::move(members));
      }
      groups.output_groups.push_back({0, 1, 2, 3, 4});
      groups.output_weights.push_back(std::sqrt(5.0));
      break;
    }
  }
  return groups;
}

double noise_variance(double signal_sqnorm, int n_outputs, Eigen::Index n_samples, double snr) {
  return signal_sqnorm /
         (static_cast<double>(n_outputs) * static_cast<double>(n_samples) * snr);
}

DatasetBundle gen_truth_and_response(Eigen::MatrixXd design, const GroupStructure& groups,
                                     const DataConfig& cfg) {
  cfg.validate();
  const int t = cfg.algorithm_target == solvers::AlgorithmId::kSiol ? 5 : 1;
  const ProblemShape shape{cfg.n_inputs, t, cfg.n_samples};
  if (design.rows() != shape.n_samples || design.cols() != shape.n_inputs)
    throw DataError("gen_truth_and_response: design does not match the config shape");

  // Truth stream: the support draw and the coefficient values share one
  // stream so the pair is reproducible as a unit.
  Rng truth_rng(derive_seed(cfg.seed, {kStreamTruth}));
  std::vector<int> true_inputs;
  switch (cfg.algorithm_target) {
    case solvers::AlgorithmId::kLasso:
      true_inputs = truth_rng.sample_without_replacement(cfg.n_inputs, cfg.n_true);
      break;
    case solvers::AlgorithmId::kGroupLasso: {
      const auto picked = truth_rng.sample_without_replacement(cfg.n_inputs / 4, cfg.n_true / 4);
      for (int g : picked)
        for (int v : groups.input_groups.at(static_cast<std::size_t>(g))) true_inputs.push_back(v);
      break;
    }
    case solvers::AlgorithmId::kSiol: {
      const auto picked = truth_rng.sample_without_replacement(
          static_cast<int>(groups.input_groups.size()), cfg.n_true);
      std::set<int> members;  // ranges overlap; dedupe
      for (int g : picked)
        for (int v : groups.input_groups.at(static_cast<std::size_t>(g))) members.insert(v);
      true_inputs.assign(members.begin(), members.end());
      break;
    }
  }
  std::sort(true_inputs.begin(), true_inputs.end());

  std::vector<int> flat;
  for (int j = 0; j < t; ++j)
    for (int i : true_inputs) flat.push_back(i + cfg.n_inputs * j);
  Selection positives = Selection::from_flat(shape, std::move(flat));

  // Coefficients in ascending flat order; uniform on (0, 1), never zero.
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(cfg.n_inputs, t);
  for (int k : positives.flat()) beta(k % cfg.n_inputs, k / cfg.n_inputs) = truth_rng.uniform_open();

  const Eigen::MatrixXd signal = design * beta;
  const double sigma2 = noise_variance(signal.squaredNorm(), t, cfg.n_samples, cfg.snr);

  Rng noise_rng(derive_seed(cfg.seed, {kStreamNoise}));
  Eigen::MatrixXd response(cfg.n_samples, t);
  noise_rng.fill_normal(response);
  response = signal + std::sqrt(sigma2) * response;
  detail::standardize_columns(response, "response");

  DatasetBundle bundle;
  bundle.shape = shape;
  bundle.design = std::move(design);
  bundle.response = std::move(response);
  bundle.groups = groups;
  bundle.truth = GroundTruth(std::move(positives));
  bundle.meta.config_name = cfg.name;
  bundle.meta.matrix_type = to_string(cfg.matrix_type);
  bundle.meta.seed = cfg.seed;
  bundle.meta.snr = cfg.snr;
  bundle.meta.extra = {{"algorithm", solvers::to_string(cfg.algorithm_target)},
                       {"n_true", cfg.n_true},
                       {"sigma2", sigma2}};
  bundle.validate();
  return bundle;
}

DatasetBundle make_dataset(const DataConfig& cfg) {
  Eigen::MatrixXd design = gen_design(cfg);
  detail::standardize_columns(design, "design");
  return gen_truth_and_response(std::move(design), gen_groups(cfg), cfg);
}

namespace {

struct SizeRow {
  char type;  // 'A'..'G'; F and G are fixed external designs
  Eigen::Index n;
  int d;
  int s;  // variables (lasso), groups (group lasso, SIOL)
};

const std::vector<SizeRow>& size_rows(solvers::AlgorithmId algorithm_target) {
  using solvers::AlgorithmId;
  static const std::vector<SizeRow> lasso = {
      {'A', 100, 1000, 4},   {'A', 100, 1000, 10}, {'A', 1000, 1000, 20}, {'A', 1000, 1000, 50},
      {'B', 200, 1000, 4},   {'B', 200, 1000, 10}, {'B', 1000, 1000, 20}, {'B', 1000, 1000, 50},
      {'C', 200, 1000, 4},   {'C', 200, 1000, 10}, {'C', 1000, 1000, 20}, {'C', 1000, 1000, 50},
      {'D', 200, 100, 10},   {'D', 200, 100, 30},  {'D', 200, 1000, 4},   {'D', 200, 1000, 10},
      {'D', 1000, 1000, 20}, {'D', 1000, 1000, 50}, {'E', 200, 200, 10},  {'E', 200, 200, 30},
      {'E', 200, 1000, 4},   {'E', 200, 1000, 10}, {'E', 1000, 1000, 20}, {'E', 1000, 1000, 50},
      {'F', 1000, 5000, 20}, {'F', 1000, 5000, 50}, {'G', 114, 1260, 4},  {'G', 114, 1260, 10},
  };
  static const std::vector<SizeRow> group = {
      {'A', 100, 1000, 4},   {'A', 200, 1000, 10}, {'A', 1000, 1000, 10}, {'A', 1000, 1000, 25},
      {'B', 200, 1000, 4},   {'B', 200, 1000, 10}, {'B', 1000, 1000, 10}, {'B', 1000, 1000, 25},
      {'C', 200, 1000, 4},   {'C', 200, 1000, 10}, {'C', 1000, 1000, 10}, {'C', 1000, 1000, 25},
      {'D', 200, 100, 5},    {'D', 200, 100, 15},  {'D', 200, 1000, 4},   {'D', 200, 1000, 10},
      {'D', 1000, 1000, 10}, {'D', 1000, 1000, 25}, {'E', 200, 200, 5},   {'E', 200, 200, 15},
      {'E', 200, 1000, 4},   {'E', 200, 1000, 10}, {'E', 1000, 1000, 10}, {'E', 1000, 1000, 25},
      {'F', 1000, 5000, 10}, {'F', 1000, 5000, 25}, {'G', 114, 1260, 2},  {'G', 114, 1260, 5},
  };
  static const std::vector<SizeRow> siol = {
      {'A', 500, 500, 5},  {'A', 500, 500, 10}, {'B', 500, 500, 5},  {'B', 500, 500, 10},
      {'C', 500, 500, 5},  {'C', 500, 500, 10}, {'D', 500, 500, 5},  {'D', 500, 500, 10},
      {'E', 500, 500, 5},  {'E', 500, 500, 10}, {'F', 1000, 5000, 5}, {'F', 1000, 5000, 20},
      {'G', 114, 1260, 2},
  };
  switch (algorithm_target) {
    case AlgorithmId::kLasso: return lasso;
    case AlgorithmId::kGroupLasso: return group;
    case AlgorithmId::kSiol: return siol;
  }
  throw std::logic_error("unknown AlgorithmId");
}

}  // namespace

std::string default_name(const DataConfig& cfg) {
  return solvers::to_string(cfg.algorithm_target) + "-" + to_string(cfg.matrix_type) + "-N" +
         std::to_string(cfg.n_samples) + "-d" + std::to_string(cfg.n_inputs) +
         (cfg.algorithm_target == solvers::AlgorithmId::kSiol ? "-sg" : "-s") +
         std::to_string(cfg.n_true) + "-snr" + fmt_num(cfg.snr);
}

DataConfig apply_scale(DataConfig cfg, double scale) {
  using solvers::AlgorithmId;
  if (!(scale > 0) || !std::isfinite(scale))
    throw std::invalid_argument("apply_scale: scale must be positive");
  if (scale == 1.0 || cfg.matrix_type == MatrixType::kExternal) return cfg;
  const bool type_b = cfg.matrix_type == MatrixType::kB;
  cfg.n_samples = std::max<Eigen::Index>(
      10, static_cast<Eigen::Index>(std::llround(static_cast<double>(cfg.n_samples) * scale)));
  switch (cfg.algorithm_target) {
    case AlgorithmId::kLasso:
      cfg.n_inputs = scaled_count(cfg.n_inputs, scale, type_b ? 10 : 1);
      cfg.n_true = scaled_count(cfg.n_true, scale, 1);
      break;
    case AlgorithmId::kGroupLasso:
      cfg.n_inputs = scaled_count(cfg.n_inputs, scale, type_b ? 20 : 4);
      cfg.n_true = 4 * scaled_count(cfg.n_true / 4, scale, 1);
      break;
    case AlgorithmId::kSiol:
      cfg.n_inputs = scaled_count(cfg.n_inputs, scale, type_b ? 10 : 5);
      cfg.n_true = std::min(scaled_count(cfg.n_true, scale, 1), (cfg.n_inputs + 4) / 5);
      break;
  }
  cfg.n_true = std::min(cfg.n_true, cfg.n_inputs);
  cfg.name = default_name(cfg);
  cfg.validate();
  return cfg;
}

std::vector<DataConfig> config_table(solvers::AlgorithmId algorithm_target, double scale) {
  using solvers::AlgorithmId;
  if (!(scale > 0) || !std::isfinite(scale))
    throw std::invalid_argument("config_table: scale must be positive");
  std::vector<DataConfig> out;
  const std::string prefix = solvers::to_string(algorithm_target);
  for (const SizeRow& row : size_rows(algorithm_target)) {
    const bool external = row.type == 'F' || row.type == 'G';
    for (double snr : {0.5, 2.0}) {
      DataConfig cfg;
      cfg.snr = snr;
      cfg.algorithm_target = algorithm_target;
      cfg.n_samples = row.n;
      cfg.n_inputs = row.d;
      // The benchmark size rows count groups for the grouped algorithms; a
      // group-lasso truth group is one quadruple.
      cfg.n_true = algorithm_target == AlgorithmId::kGroupLasso ? 4 * row.s : row.s;
      if (external) {
        // Fixed designs keep their intrinsic shape; only the file is
        // missing, so these rows skip scaling and validation.
        cfg.matrix_type = MatrixType::kExternal;
        cfg.name = prefix + "-" + row.type + "-N" + std::to_string(cfg.n_samples) + "-d" +
                   std::to_string(cfg.n_inputs) +
                   (algorithm_target == AlgorithmId::kSiol ? "-sg" : "-s") +
                   std::to_string(cfg.n_true) + "-snr" + fmt_num(snr);
      } else {
        cfg.matrix_type = matrix_type_from_string(std::string(1, row.type));
        cfg = apply_scale(std::move(cfg), scale);
        cfg.name = default_name(cfg);
        cfg.validate();
      }
      out.push_back(std::move(cfg));
    }
  }
  return out;
}

}  // namespace stabsel::datagen
