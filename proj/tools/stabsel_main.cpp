#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stabsel/control.hpp"
#include "stabsel/harness.hpp"
#include "stabsel/io.hpp"
#include "stabsel/meta.hpp"

namespace {

using nlohmann::json;
using namespace stabsel;

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    io::atomic_write_text(out_path, content);
}

struct GenArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double scale = 1.0;
  std::string out_dir;
};

int cmd_gen(const GenArgs& args) {
  auto cfg = harness::data_config_from_json(io::load_json_file(args.config_path));
  cfg = datagen::apply_scale(std::move(cfg), args.scale);
  if (args.seed_set) cfg.seed = args.seed;
  io::save_bundle(args.out_dir, datagen::make_dataset(cfg));
  std::cout << "wrote " << args.out_dir << " (" << cfg.name << ", seed " << cfg.seed << ")\n";
  return 0;
}

struct FitArgs {
  std::string data_dir;
  std::string algorithm = "lasso";
  double lambda = 0.0;
  double l1_weight = 1.0;
  bool include_coefficients = false;
  std::string out_path;
};

int cmd_fit(const FitArgs& args) {
  const auto data = io::load_bundle(args.data_dir);
  const auto algorithm = solvers::algorithm_from_string(args.algorithm);
  solvers::PenaltyConfig penalty;
  penalty.lambda = args.lambda;
  penalty.l1_weight = args.l1_weight;
  const auto report = solvers::fit(data, algorithm, penalty, solvers::SolverOptions{});

  json j;
  j["algorithm"] = args.algorithm;
  j["lambda"] = args.lambda;
  j["l1_weight"] = args.l1_weight;
  j["objective_value"] = report.objective_value;
  j["kkt_residual"] = report.kkt_residual;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  json sel = json::array();
  for (const Pair& p : report.coefficients.support().pairs()) sel.push_back({p.input, p.output});
  j["selection"] = std::move(sel);
  if (args.include_coefficients) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < report.coefficients.values.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < report.coefficients.values.cols(); ++c)
        row.push_back(report.coefficients.values(i, c));
      rows.push_back(std::move(row));
    }
    j["coefficients"] = std::move(rows);
  }
  emit(args.out_path, j.dump(2) + "\n");
  return 0;
}

struct SweepArgs {
  std::string data_dir;
  std::string algorithm = "lasso";
  double l1_weight = 1.0;
  double decay = 0.98;
  int max_grid = 400;
  std::string out_path;
};

int cmd_sweep(const SweepArgs& args) {
  const auto data = io::load_bundle(args.data_dir);
  const auto algorithm = solvers::algorithm_from_string(args.algorithm);
  const double lambda_top = solvers::lambda_max(data, algorithm, args.l1_weight);
  std::string out = "grid_index,lambda,size,objective,kkt,converged\n";
  Eigen::MatrixXd warm;
  solvers::SolverOptions opts;
  for (int l = 0; l < args.max_grid; ++l) {
    const double lambda = lambda_top * std::pow(args.decay, l);
    solvers::PenaltyConfig penalty;
    penalty.lambda = lambda;
    penalty.l1_weight = args.l1_weight;
    opts.warm_start = l > 0 ? &warm : nullptr;
    const auto report = solvers::fit(data, algorithm, penalty, opts);
    warm = report.coefficients.values;
    bool cutoff = false;
    for (Eigen::Index j = 0; j < warm.cols() && !cutoff; ++j) {
      int members = 0;
      for (Eigen::Index i = 0; i < warm.rows(); ++i)
        if (std::abs(warm(i, j)) >= solvers::kSupportThreshold) ++members;
      cutoff = 2 * members > data.shape.n_samples;
    }
    if (cutoff && l > 0) break;
    out += std::to_string(l) + "," + fmt6(lambda) + "," +
           std::to_string(report.coefficients.support().size()) + "," +
           fmt6(report.objective_value) + "," + fmt6(report.kkt_residual) + "," +
           (report.converged ? "1" : "0") + "\n";
    if (cutoff) break;
  }
  emit(args.out_path, out);
  return 0;
}

struct RunArgs {
  std::string spec_path;
  int workers = 1;
  std::string out_dir;
};

int cmd_run(const RunArgs& args) {
  auto spec = harness::spec_from_json(io::load_json_file(args.spec_path));
  if (!args.out_dir.empty()) spec.output_dir = args.out_dir;
  const auto summary = harness::run_experiment(spec, args.workers);
  std::cout << "cells written " << summary.written << ", skipped " << summary.skipped
            << ", failed jobs " << summary.failed << "\n";
  for (const auto& f : summary.failures) std::cerr << "failed: " << f << "\n";
  if (summary.all_failed()) return 2;
  if (summary.failed > 0) return 3;
  return 0;
}

struct BoundArgs {
  std::string result_path;
  std::vector<double> pis;
  std::string out_path;
};

int cmd_bound(const BoundArgs& args) {
  const auto cell = harness::cell_from_json(io::load_json_file(args.result_path));
  if (cell.tau_counts.empty())
    throw DataError(args.result_path + " is not a stability result (no tau counts)");
  meta::StabilityProfile profile;
  profile.shape = cell.shape;
  profile.counts = cell.tau_counts;
  profile.iterations = cell.iterations;
  const bool have_truth = !cell.truth.empty();
  const auto truth =
      have_truth ? std::optional<GroundTruth>(GroundTruth(Selection::from_pairs(cell.shape, cell.truth)))
                 : std::nullopt;
  std::string out = have_truth ? "pi,b_hat,size,v\n" : "pi,b_hat,size\n";
  for (double pi : args.pis) {
    const double b_hat = control::nfp_bound(profile.q_hat(), cell.shape.flat_size(), pi);
    const Selection sel = meta::threshold_profile(profile, pi);
    out += fmt6(pi) + "," + fmt6(b_hat) + "," + std::to_string(sel.size());
    if (have_truth) out += "," + std::to_string(confusion(sel, *truth).false_positives);
    out += "\n";
  }
  emit(args.out_path, out);
  return 0;
}

struct ReportArgs {
  std::string store_dir;
  std::string table;
  std::string out_path;
  std::vector<double> targets = {1.0, 10.0};
  std::vector<double> gammas = {0.1, 0.4};
  int max_v = 20;
};

int cmd_report(const ReportArgs& args) {
  const auto cells = harness::load_store(args.store_dir);
  if (cells.empty()) throw DataError("store " + args.store_dir + " has no cells");
  std::string out;
  if (args.table == "roc")
    out = harness::csv_roc(cells, args.max_v);
  else if (args.table == "error-control")
    out = harness::csv_error_control(cells, args.targets);
  else if (args.table == "model-choice")
    out = harness::csv_model_choice(cells);
  else
    out = harness::csv_gamma_power(cells, args.gammas);
  emit(args.out_path, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse structured variable selection with stability-based error control"};
  app.require_subcommand(1);

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a dataset bundle directory");
  gen->add_option("--config", gen_args.config_path, "Data config JSON")->required();
  gen->add_option("--seed", gen_args.seed, "Seed override")->each([&](const std::string&) {
    gen_args.seed_set = true;
  });
  gen->add_option("--scale", gen_args.scale, "Size scale factor");
  gen->add_option("--out", gen_args.out_dir, "Output directory")->required();

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit one penalized model on a bundle");
  fit->add_option("--data", fit_args.data_dir, "Bundle directory")->required();
  fit->add_option("--algorithm", fit_args.algorithm, "lasso | group-lasso | siol");
  fit->add_option("--lambda", fit_args.lambda, "Penalty level")->required();
  fit->add_option("--l1-weight", fit_args.l1_weight, "SIOL w");
  fit->add_flag("--coefficients", fit_args.include_coefficients, "Include the dense matrix");
  fit->add_option("--out", fit_args.out_path, "Output JSON (stdout when omitted)");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Warm-started lambda sweep on a bundle");
  sweep->add_option("--data", sweep_args.data_dir, "Bundle directory")->required();
  sweep->add_option("--algorithm", sweep_args.algorithm, "lasso | group-lasso | siol");
  sweep->add_option("--l1-weight", sweep_args.l1_weight, "SIOL w");
  sweep->add_option("--decay", sweep_args.decay, "Grid decay per step");
  sweep->add_option("--max-grid", sweep_args.max_grid, "Grid length cap");
  sweep->add_option("--out", sweep_args.out_path, "Output CSV (stdout when omitted)");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an experiment spec into a result store");
  run->add_option("--spec", run_args.spec_path, "Experiment spec JSON")->required();
  run->add_option("--workers", run_args.workers, "Worker threads");
  run->add_option("--out", run_args.out_dir, "Output directory override");

  BoundArgs bound_args;
  auto* bound = app.add_subcommand("bound", "Re-threshold a stability result across pi values");
  bound->add_option("--result", bound_args.result_path, "Stability RegimeResult JSON")->required();
  bound->add_option("--pi", bound_args.pis, "Thresholds in (0.5, 1]")->required()->delimiter(',');
  bound->add_option("--out", bound_args.out_path, "Output CSV (stdout when omitted)");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Aggregate a result store into a CSV table");
  report->add_option("--store", report_args.store_dir, "Result store directory")->required();
  report->add_option("--table", report_args.table, "roc | error-control | model-choice | gamma-power")
      ->required()
      ->check(CLI::IsMember({"roc", "error-control", "model-choice", "gamma-power"}));
  report->add_option("--out", report_args.out_path, "Output CSV (stdout when omitted)");
  report->add_option("--targets", report_args.targets, "Bound targets for error-control")->delimiter(',');
  report->add_option("--gammas", report_args.gammas, "Gamma values for gamma-power")->delimiter(',');
  report->add_option("--max-v", report_args.max_v, "Largest V level for roc");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_args);
    if (fit->parsed()) return cmd_fit(fit_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    if (run->parsed()) return cmd_run(run_args);
    if (bound->parsed()) return cmd_bound(bound_args);
    if (report->parsed()) return cmd_report(report_args);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
