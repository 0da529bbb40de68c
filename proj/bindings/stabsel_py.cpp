#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stabsel/control.hpp"
#include "stabsel/datagen.hpp"
#include "stabsel/meta.hpp"
#include "stabsel/stats.hpp"

namespace py = pybind11;
using namespace stabsel;

namespace {

// Python-facing indices are 0-based throughout; the 1-based convention is
// a file-format concern.
GroupStructure make_groups(const std::vector<std::vector<int>>& input_groups,
                           std::vector<double> input_weights,
                           const std::vector<std::vector<int>>& output_groups,
                           std::vector<double> output_weights) {
  GroupStructure g;
  g.input_groups = input_groups;
  g.input_weights = std::move(input_weights);
  g.output_groups = output_groups;
  g.output_weights = std::move(output_weights);
  if (g.input_weights.empty()) g.input_weights.assign(g.input_groups.size(), 1.0);
  if (g.output_weights.empty()) g.output_weights.assign(g.output_groups.size(), 1.0);
  return g;
}

DatasetBundle make_bundle(Eigen::MatrixXd design, Eigen::MatrixXd response,
                          const std::vector<std::vector<int>>& input_groups,
                          std::vector<double> input_weights,
                          const std::vector<std::vector<int>>& output_groups,
                          std::vector<double> output_weights) {
  DatasetBundle bundle;
  bundle.shape.n_inputs = static_cast<int>(design.cols());
  bundle.shape.n_outputs = static_cast<int>(response.cols());
  bundle.shape.n_samples = design.rows();
  bundle.design = std::move(design);
  bundle.response = std::move(response);
  bundle.groups = make_groups(input_groups, std::move(input_weights), output_groups,
                              std::move(output_weights));
  bundle.validate();
  return bundle;
}

py::list selection_to_list(const Selection& selection) {
  py::list out;
  for (const Pair& p : selection.pairs()) out.append(py::make_tuple(p.input - 1, p.output - 1));
  return out;
}

meta::SubAlgorithm make_sub(const std::string& algorithm, double l1_weight) {
  meta::SubAlgorithm sub;
  sub.algorithm = solvers::algorithm_from_string(algorithm);
  sub.penalty.l1_weight = l1_weight;
  return sub;
}

py::dict report_to_dict(const solvers::FitReport& report) {
  py::dict d;
  d["coefficients"] = report.coefficients.values;
  d["objective_value"] = report.objective_value;
  d["kkt_residual"] = report.kkt_residual;
  d["iterations"] = report.iterations;
  d["converged"] = report.converged;
  d["selection"] = selection_to_list(report.coefficients.support());
  return d;
}

constexpr const char* kGroupsDoc =
    "Groups are lists of 0-based member indices; weights default to 1.";

}  // namespace

PYBIND11_MODULE(_stabsel, m) {
  m.doc() = "Sparse structured variable selection: solvers, stability selection, "
            "screen-and-clean, cross-validation, and the NFP bound.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  m.def(
      "fit",
      [](Eigen::MatrixXd design, Eigen::MatrixXd response, const std::string& algorithm,
         double lam, double l1_weight, const std::vector<std::vector<int>>& input_groups,
         std::vector<double> input_weights, const std::vector<std::vector<int>>& output_groups,
         std::vector<double> output_weights) {
        const auto bundle = make_bundle(std::move(design), std::move(response), input_groups,
                                        std::move(input_weights), output_groups,
                                        std::move(output_weights));
        solvers::PenaltyConfig penalty;
        penalty.lambda = lam;
        penalty.l1_weight = l1_weight;
        return report_to_dict(
            solvers::fit(bundle, solvers::algorithm_from_string(algorithm), penalty));
      },
      py::arg("design"), py::arg("response"), py::arg("algorithm"), py::arg("lambda"),
      py::arg("l1_weight") = 1.0, py::arg("input_groups") = std::vector<std::vector<int>>(),
      py::arg("input_weights") = std::vector<double>(),
      py::arg("output_groups") = std::vector<std::vector<int>>(),
      py::arg("output_weights") = std::vector<double>(), kGroupsDoc);

  m.def(
      "lambda_max",
      [](Eigen::MatrixXd design, Eigen::MatrixXd response, const std::string& algorithm,
         double l1_weight, const std::vector<std::vector<int>>& input_groups,
         std::vector<double> input_weights, const std::vector<std::vector<int>>& output_groups,
         std::vector<double> output_weights) {
        const auto bundle = make_bundle(std::move(design), std::move(response), input_groups,
                                        std::move(input_weights), output_groups,
                                        std::move(output_weights));
        return solvers::lambda_max(bundle, solvers::algorithm_from_string(algorithm), l1_weight);
      },
      py::arg("design"), py::arg("response"), py::arg("algorithm"), py::arg("l1_weight") = 1.0,
      py::arg("input_groups") = std::vector<std::vector<int>>(),
      py::arg("input_weights") = std::vector<double>(),
      py::arg("output_groups") = std::vector<std::vector<int>>(),
      py::arg("output_weights") = std::vector<double>(),
      "Smallest lambda with an empty fit (a verified envelope for siol).");

  m.def(
      "make_dataset",
      [](const std::string& matrix_type, Eigen::Index n_samples, int n_inputs, int n_true,
         double snr, const std::string& algorithm, std::uint64_t seed,
         const std::string& external_path) {
        datagen::DataConfig cfg;
        cfg.matrix_type = datagen::matrix_type_from_string(matrix_type);
        cfg.n_samples = n_samples;
        cfg.n_inputs = n_inputs;
        cfg.n_true = n_true;
        cfg.snr = snr;
        cfg.algorithm_target = solvers::algorithm_from_string(algorithm);
        cfg.seed = seed;
        cfg.external_path = external_path;
        cfg.name = datagen::default_name(cfg);
        const auto bundle = datagen::make_dataset(cfg);
        py::dict d;
        d["design"] = bundle.design;
        d["response"] = bundle.response;
        py::list igroups, ogroups;
        for (const auto& g : bundle.groups.input_groups) igroups.append(g);
        for (const auto& g : bundle.groups.output_groups) ogroups.append(g);
        d["input_groups"] = igroups;
        d["input_weights"] = bundle.groups.input_weights;
        d["output_groups"] = ogroups;
        d["output_weights"] = bundle.groups.output_weights;
        d["truth"] = selection_to_list(bundle.truth->positives());
        d["name"] = bundle.meta.config_name;
        return d;
      },
      py::arg("matrix_type"), py::arg("n_samples"), py::arg("n_inputs"), py::arg("n_true"),
      py::arg("snr") = 1.0, py::arg("algorithm") = "lasso", py::arg("seed") = 0,
      py::arg("external_path") = "",
      "Standardized synthetic dataset per the design-type recipes (A..E).");

  m.def(
      "stability_select",
      [](Eigen::MatrixXd design, Eigen::MatrixXd response, const std::string& algorithm,
         double lam, int iterations, double subsample_fraction, double threshold,
         std::uint64_t seed, double l1_weight, const std::vector<std::vector<int>>& input_groups,
         std::vector<double> input_weights, const std::vector<std::vector<int>>& output_groups,
         std::vector<double> output_weights) {
        const auto bundle = make_bundle(std::move(design), std::move(response), input_groups,
                                        std::move(input_weights), output_groups,
                                        std::move(output_weights));
        auto sub = make_sub(algorithm, l1_weight);
        sub.penalty.lambda = lam;
        meta::StabilityConfig cfg;
        cfg.subsample_fraction = subsample_fraction;
        cfg.iterations = iterations;
        cfg.threshold = threshold;
        cfg.seed = seed;
        const auto outcome = meta::stability_select(bundle, sub, cfg);
        const int d_inputs = bundle.shape.n_inputs;
        const int t_outputs = bundle.shape.n_outputs;
        Eigen::MatrixXd tau(d_inputs, t_outputs);
        const auto tau_flat = outcome.profile.tau();
        for (int k = 0; k < bundle.shape.flat_size(); ++k)
          tau(k % d_inputs, k / d_inputs) = tau_flat[static_cast<std::size_t>(k)];
        py::dict result;
        result["tau"] = tau;
        result["q_hat"] = outcome.profile.q_hat();
        result["selection"] = selection_to_list(outcome.selection);
        result["failures"] = outcome.profile.failures;
        result["invocations"] = outcome.invocations;
        return result;
      },
      py::arg("design"), py::arg("response"), py::arg("algorithm"), py::arg("lambda"),
      py::arg("iterations") = 100, py::arg("subsample_fraction") = 0.5,
      py::arg("threshold") = 0.9, py::arg("seed") = 0, py::arg("l1_weight") = 1.0,
      py::arg("input_groups") = std::vector<std::vector<int>>(),
      py::arg("input_weights") = std::vector<double>(),
      py::arg("output_groups") = std::vector<std::vector<int>>(),
      py::arg("output_weights") = std::vector<double>(), kGroupsDoc);

  m.def(
      "cross_validate",
      [](Eigen::MatrixXd design, Eigen::MatrixXd response, const std::string& algorithm,
         int folds, double decay, std::uint64_t seed, double l1_weight,
         const std::vector<std::vector<int>>& input_groups, std::vector<double> input_weights,
         const std::vector<std::vector<int>>& output_groups,
         std::vector<double> output_weights) {
        const auto bundle = make_bundle(std::move(design), std::move(response), input_groups,
                                        std::move(input_weights), output_groups,
                                        std::move(output_weights));
        meta::CVConfig cfg;
        cfg.folds = folds;
        cfg.decay = decay;
        cfg.seed = seed;
        const auto result = meta::cross_validate(bundle, make_sub(algorithm, l1_weight), cfg);
        py::dict d;
        d["chosen_lambda"] = result.chosen_lambda;
        d["selection"] = selection_to_list(result.selection);
        d["coefficients"] = result.coefficients;
        py::list table;
        for (const auto& point : result.table)
          table.append(py::make_tuple(point.lambda, point.mean_validation_error));
        d["table"] = table;
        d["all_empty"] = result.all_empty;
        d["invocations"] = result.invocations;
        return d;
      },
      py::arg("design"), py::arg("response"), py::arg("algorithm"), py::arg("folds") = 10,
      py::arg("decay") = 0.98, py::arg("seed") = 0, py::arg("l1_weight") = 1.0,
      py::arg("input_groups") = std::vector<std::vector<int>>(),
      py::arg("input_weights") = std::vector<double>(),
      py::arg("output_groups") = std::vector<std::vector<int>>(),
      py::arg("output_weights") = std::vector<double>(), kGroupsDoc);

  m.def(
      "screen_and_clean",
      [](Eigen::MatrixXd design, Eigen::MatrixXd response, const std::string& algorithm,
         int splits, int folds, double threshold, std::uint64_t seed, double l1_weight,
         const std::vector<std::vector<int>>& input_groups, std::vector<double> input_weights,
         const std::vector<std::vector<int>>& output_groups,
         std::vector<double> output_weights) {
        const auto bundle = make_bundle(std::move(design), std::move(response), input_groups,
                                        std::move(input_weights), output_groups,
                                        std::move(output_weights));
        meta::SacConfig cfg;
        cfg.splits = splits;
        cfg.folds = folds;
        cfg.threshold = threshold;
        cfg.seed = seed;
        const auto result = meta::screen_and_clean(bundle, make_sub(algorithm, l1_weight), cfg);
        py::dict d;
        d["p_values"] = result.p_values;
        d["selection"] = selection_to_list(result.selection);
        d["invocations"] = result.invocations;
        d["rank_drops"] = result.rank_drops;
        d["truncations"] = result.truncations;
        return d;
      },
      py::arg("design"), py::arg("response"), py::arg("algorithm"), py::arg("splits") = 10,
      py::arg("folds") = 10, py::arg("threshold") = 1.0, py::arg("seed") = 0,
      py::arg("l1_weight") = 1.0, py::arg("input_groups") = std::vector<std::vector<int>>(),
      py::arg("input_weights") = std::vector<double>(),
      py::arg("output_groups") = std::vector<std::vector<int>>(),
      py::arg("output_weights") = std::vector<double>(), kGroupsDoc);

  m.def("nfp_bound", &control::nfp_bound, py::arg("q_hat"), py::arg("k_size"), py::arg("pi"),
        "Expected-NFP bound q_hat^2 / (|K| (2 pi - 1)).");
  m.def("pi_for_bound", &control::pi_for_bound, py::arg("q_hat"), py::arg("k_size"),
        py::arg("target"), "Threshold at which the bound equals target; may exceed 1.");
  m.def("bh_adjust", &stats::bh_adjust, py::arg("p_values"),
        "Benjamini-Hochberg adjusted p-values (unclipped).");
  m.def("student_t_p", &stats::two_sided_p, py::arg("t"), py::arg("df"),
        "Two-sided Student-t p-value.");
}
