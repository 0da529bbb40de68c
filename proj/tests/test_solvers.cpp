#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/solvers.hpp"
#include "stabsel/types.hpp"

using namespace stabsel;
using solvers::AlgorithmId;
using solvers::PenaltyConfig;

namespace {

// Random standardized single-output instance with a sparse truth signal.
DatasetBundle random_instance(Eigen::Index n, int d, std::uint64_t seed, int t = 1) {
  Rng rng(seed);
  DatasetBundle b;
  b.shape = {d, t, n};
  b.design.resize(n, d);
  rng.fill_normal(b.design);
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(d, t);
  for (int j = 0; j < t; ++j)
    for (int k = 0; k < std::min(3, d); ++k)
      beta(static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(d))), j) =
          rng.uniform_open() * 2.0 - 1.0;
  Eigen::MatrixXd noise(n, t);
  rng.fill_normal(noise);
  b.response = b.design * beta + 0.5 * noise;
  return standardize(std::move(b));
}

// Columns rescaled so (1/N) X^T X = I exactly (up to fp rounding): the lasso
// then has the entrywise soft-threshold solution.
DatasetBundle orthonormal_instance(Eigen::Index n, int d, std::uint64_t seed) {
  DatasetBundle b = random_instance(n, d, seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(b.design);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
  b.design = std::sqrt(static_cast<double>(n)) * q;
  return b;
}

std::vector<std::vector<int>> singleton_groups(int d) {
  std::vector<std::vector<int>> g(d);
  for (int j = 0; j < d; ++j) g[j] = {j};
  return g;
}

double lasso_kkt(const DatasetBundle& b, const Eigen::VectorXd& beta, double lambda) {
  const double n = static_cast<double>(b.shape.n_samples);
  const Eigen::VectorXd grad = b.design.transpose() * (b.response.col(0) - b.design * beta) / n;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (std::abs(beta[j]) > solvers::kSupportThreshold)
      worst = std::max(worst, std::abs(grad[j] - lambda * (beta[j] > 0 ? 1.0 : -1.0)));
    else
      worst = std::max(worst, std::max(0.0, std::abs(grad[j]) - lambda));
  }
  return worst;
}

}  // namespace

TEST_CASE("lasso single-column closed form") {
  // Standardized x, (1/N) x^T y = 0.7, lambda = 0.5: beta = soft(0.7, 0.5) = 0.2.
  DatasetBundle b;
  b.shape = {1, 1, 3};
  b.design.resize(3, 1);
  const double r = std::sqrt(1.5);
  b.design << -r, 0.0, r;
  b.response = 0.7 * b.design;
  const auto report = solvers::fit_lasso(b, {0.5, 1.0});
  CHECK(report.converged);
  CHECK(report.coefficients.values(0, 0) == doctest::Approx(0.2).epsilon(1e-10));
  // Above threshold the fit is exactly empty.
  const auto zero = solvers::fit_lasso(b, {0.75, 1.0});
  CHECK(zero.coefficients.values(0, 0) == 0.0);
}

TEST_CASE("lasso on orthonormal designs matches soft-threshold exactly") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const DatasetBundle b = orthonormal_instance(40, 6, seed);
    const double n = 40.0;
    const Eigen::VectorXd z = b.design.transpose() * b.response.col(0) / n;
    const double lambda = 0.6 * z.cwiseAbs().maxCoeff();
    Eigen::VectorXd expect(6);
    for (int j = 0; j < 6; ++j) expect[j] = oracles::soft(z[j], lambda);

    const auto report = solvers::fit_lasso(b, {lambda, 1.0});
    CHECK(report.converged);
    CHECK((report.coefficients.values.col(0) - expect).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(report.objective_value ==
          doctest::Approx(oracles::lasso_objective(b.design, b.response.col(0), expect, lambda))
              .epsilon(1e-10));
  }
}

TEST_CASE("lasso matches a long proximal-gradient run on general designs") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const DatasetBundle b = random_instance(30, 8, seed);
    const double lambda = 0.3 * solvers::lambda_max(b, AlgorithmId::kLasso);
    const Eigen::VectorXd oracle =
        oracles::ista_lasso(b.design, b.response.col(0), lambda, 200000);
    const double oracle_obj = oracles::lasso_objective(b.design, b.response.col(0), oracle, lambda);

    const auto report = solvers::fit_lasso(b, {lambda, 1.0});
    CHECK(report.converged);
    CHECK(report.objective_value <= oracle_obj + 1e-6);
    CHECK((report.coefficients.values.col(0) - oracle).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(report.kkt_residual <= 1e-6);
    CHECK(lasso_kkt(b, report.coefficients.values.col(0), lambda) <= 1e-6);
  }
}

TEST_CASE("lasso lambda_max is the exact support boundary") {
  const DatasetBundle b = random_instance(25, 7, 99);
  const double lm = solvers::lambda_max(b, AlgorithmId::kLasso);
  const double expect =
      (b.design.transpose() * b.response.col(0) / 25.0).cwiseAbs().maxCoeff();
  CHECK(lm == doctest::Approx(expect).epsilon(1e-12));
  CHECK(solvers::fit_lasso(b, {lm, 1.0}).coefficients.support().empty());
  CHECK_FALSE(solvers::fit_lasso(b, {lm * 0.99, 1.0}).coefficients.support().empty());
}

TEST_CASE("group lasso with singleton groups reduces to the lasso") {
  DatasetBundle b = random_instance(30, 6, 21);
  b.groups.input_groups = singleton_groups(6);
  b.groups.input_weights.assign(6, 1.0);
  const double lambda = 0.25 * solvers::lambda_max(b, AlgorithmId::kLasso);
  const auto lasso = solvers::fit_lasso(b, {lambda, 1.0});
  const auto group = solvers::fit_group_lasso(b, {lambda, 1.0});
  CHECK(group.converged);
  CHECK((group.coefficients.values - lasso.coefficients.values).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("group lasso on orthonormal designs matches the block closed form") {
  DatasetBundle b = orthonormal_instance(48, 8, 5);
  b.groups.input_groups = {{0, 1, 2}, {3, 4}, {5, 6, 7}};
  b.groups.input_weights = {std::sqrt(3.0), std::sqrt(2.0), std::sqrt(3.0)};
  const Eigen::VectorXd z = b.design.transpose() * b.response.col(0) / 48.0;
  double lambda = 0.0;
  for (size_t g = 0; g < 3; ++g) {
    double norm = 0.0;
    for (int j : b.groups.input_groups[g]) norm += z[j] * z[j];
    lambda = std::max(lambda, std::sqrt(norm) / b.groups.input_weights[g]);
  }
  lambda *= 0.55;

  Eigen::VectorXd expect = Eigen::VectorXd::Zero(8);
  for (size_t g = 0; g < 3; ++g) {
    double norm = 0.0;
    for (int j : b.groups.input_groups[g]) norm += z[j] * z[j];
    norm = std::sqrt(norm);
    const double shrink = std::max(0.0, 1.0 - lambda * b.groups.input_weights[g] / norm);
    for (int j : b.groups.input_groups[g]) expect[j] = shrink * z[j];
  }

  const auto report = solvers::fit_group_lasso(b, {lambda, 1.0});
  CHECK(report.converged);
  CHECK((report.coefficients.values.col(0) - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("group lasso matches a long proximal-gradient run") {
  DatasetBundle b = random_instance(40, 12, 31);
  b.groups.input_groups = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11}};
  b.groups.input_weights.assign(4, std::sqrt(3.0));
  const double lambda = 0.3 * solvers::lambda_max(b, AlgorithmId::kGroupLasso);
  const Eigen::VectorXd oracle = oracles::ista_group_lasso(
      b.design, b.response.col(0), b.groups.input_groups, b.groups.input_weights, lambda, 300000);
  const double oracle_obj = oracles::group_objective(
      b.design, b.response.col(0), oracle, b.groups.input_groups, b.groups.input_weights, lambda);

  const auto report = solvers::fit_group_lasso(b, {lambda, 1.0});
  CHECK(report.converged);
  CHECK(report.objective_value <= oracle_obj + 1e-6);
  CHECK((report.coefficients.values.col(0) - oracle).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("group lasso lambda_max zeroes exactly the right groups") {
  DatasetBundle b = random_instance(36, 9, 77);
  b.groups.input_groups = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}};
  b.groups.input_weights = {1.0, 2.0, std::sqrt(3.0)};
  const Eigen::VectorXd z = b.design.transpose() * b.response.col(0) / 36.0;
  double expect = 0.0;
  for (size_t g = 0; g < 3; ++g) {
    double norm = 0.0;
    for (int j : b.groups.input_groups[g]) norm += z[j] * z[j];
    expect = std::max(expect, std::sqrt(norm) / b.groups.input_weights[g]);
  }
  const double lm = solvers::lambda_max(b, AlgorithmId::kGroupLasso);
  CHECK(lm == doctest::Approx(expect).epsilon(1e-12));
  CHECK(solvers::fit_group_lasso(b, {lm, 1.0}).coefficients.support().empty());
  CHECK_FALSE(solvers::fit_group_lasso(b, {lm * 0.98, 1.0}).coefficients.support().empty());
}

TEST_CASE("group lasso rejects non-partition groups") {
  DatasetBundle b = random_instance(20, 6, 3);
  b.groups.input_groups = {{0, 1}, {1, 2, 3}, {4, 5}};  // overlap
  b.groups.input_weights = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(solvers::fit_group_lasso(b, {0.1, 1.0}), DataError);
}

TEST_CASE("siol with no groups and unit weight reduces to the lasso") {
  const DatasetBundle b = random_instance(30, 8, 41);
  const double lambda = 0.3 * solvers::lambda_max(b, AlgorithmId::kLasso);
  const auto lasso = solvers::fit_lasso(b, {lambda, 1.0});
  const auto siol = solvers::fit_siol(b, {lambda, 1.0});
  CHECK(siol.converged);
  CHECK((siol.coefficients.values - lasso.coefficients.values).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("siol without output groups decomposes per output") {
  DatasetBundle b = random_instance(40, 10, 51, 3);
  b.groups.input_groups = {{0, 1, 2, 3}, {3, 4, 5, 6}, {6, 7, 8, 9}};
  b.groups.input_weights = {2.0, 2.0, 2.0};
  const PenaltyConfig penalty{0.08, 1.5};
  const auto joint = solvers::fit_siol(b, penalty);
  CHECK(joint.converged);

  for (int j = 0; j < 3; ++j) {
    DatasetBundle single = b;
    single.shape.n_outputs = 1;
    single.response = b.response.col(j);
    single.truth.reset();
    const auto part = solvers::fit_siol(single, penalty);
    CHECK((joint.coefficients.values.col(j) - part.coefficients.values.col(0))
              .cwiseAbs()
              .maxCoeff() < 1e-5);
  }
}

TEST_CASE("siol lambda_max envelope empties the fit") {
  DatasetBundle b = random_instance(30, 10, 61, 2);
  b.groups.input_groups = {{0, 1, 2, 3, 4}, {4, 5, 6, 7, 8, 9}};
  b.groups.input_weights = {std::sqrt(5.0), std::sqrt(6.0)};
  b.groups.output_groups = {{0, 1}};
  b.groups.output_weights = {std::sqrt(2.0)};
  const double lm = solvers::lambda_max(b, AlgorithmId::kSiol, 2.0);
  const auto report = solvers::fit_siol(b, {lm, 2.0});
  CHECK(report.coefficients.support().empty());
  // The envelope is conservative but not vacuous: an order of magnitude
  // below it the fit is nonempty.
  CHECK_FALSE(solvers::fit_siol(b, {lm * 0.1, 2.0}).coefficients.support().empty());
}

TEST_CASE("warm starts converge to the cold solution") {
  const DatasetBundle b = random_instance(35, 9, 71);
  const double lm = solvers::lambda_max(b, AlgorithmId::kLasso);
  const auto at_high = solvers::fit_lasso(b, {0.5 * lm, 1.0});
  solvers::SolverOptions warm_opts;
  warm_opts.warm_start = &at_high.coefficients.values;
  const auto warm = solvers::fit_lasso(b, {0.2 * lm, 1.0}, warm_opts);
  const auto cold = solvers::fit_lasso(b, {0.2 * lm, 1.0});
  CHECK((warm.coefficients.values - cold.coefficients.values).cwiseAbs().maxCoeff() < 1e-6);

  DatasetBundle g = b;
  g.groups.input_groups = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}};
  g.groups.input_weights.assign(3, std::sqrt(3.0));
  const double glm = solvers::lambda_max(g, AlgorithmId::kGroupLasso);
  const auto ghigh = solvers::fit_group_lasso(g, {0.5 * glm, 1.0});
  solvers::SolverOptions gwarm;
  gwarm.warm_start = &ghigh.coefficients.values;
  CHECK((solvers::fit_group_lasso(g, {0.2 * glm, 1.0}, gwarm).coefficients.values -
         solvers::fit_group_lasso(g, {0.2 * glm, 1.0}).coefficients.values)
            .cwiseAbs()
            .maxCoeff() < 1e-6);
}

TEST_CASE("fit dispatches on the algorithm id") {
  const DatasetBundle b = random_instance(20, 5, 13);
  const PenaltyConfig penalty{0.1, 1.0};
  CHECK(solvers::fit(b, AlgorithmId::kLasso, penalty).coefficients.values ==
        solvers::fit_lasso(b, penalty).coefficients.values);
}

TEST_CASE("algorithm names round trip") {
  using solvers::algorithm_from_string;
  using solvers::to_string;
  for (auto id : {AlgorithmId::kLasso, AlgorithmId::kGroupLasso, AlgorithmId::kSiol})
    CHECK(algorithm_from_string(to_string(id)) == id);
  CHECK(to_string(AlgorithmId::kGroupLasso) == "group-lasso");
  CHECK_THROWS_AS(algorithm_from_string("ridge"), DataError);
}

TEST_CASE("lambda_grid is the geometric walk from the examples") {
  const auto g1 = solvers::lambda_grid(1.0, 0.98, 3);
  REQUIRE(g1.size() == 3);
  CHECK(g1[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g1[1] == doctest::Approx(0.98).epsilon(1e-15));
  CHECK(g1[2] == doctest::Approx(0.9604).epsilon(1e-12));

  const auto g2 = solvers::lambda_grid(2.0, 0.9, 4);
  REQUIRE(g2.size() == 4);
  CHECK(g2[0] == doctest::Approx(2.0));
  CHECK(g2[1] == doctest::Approx(1.8));
  CHECK(g2[2] == doctest::Approx(1.62));
  CHECK(g2[3] == doctest::Approx(1.458));
}

TEST_CASE("support extraction respects the threshold") {
  solvers::CoefficientMatrix cm;
  cm.shape = {3, 2, 10};
  cm.values.setZero(3, 2);
  cm.values(0, 0) = 0.5;
  cm.values(2, 1) = 1e-9;  // below threshold: not support
  cm.values(1, 1) = -2e-8;
  const Selection s = cm.support();
  CHECK(s.pairs() == std::vector<Pair>{{1, 1}, {2, 2}});
  CHECK(cm.support(1e-10).size() == 3);
}

TEST_CASE("lasso requires a single output") {
  DatasetBundle b = random_instance(20, 4, 17, 2);
  CHECK_THROWS_AS(solvers::fit_lasso(b, {0.1, 1.0}), DataError);
}
