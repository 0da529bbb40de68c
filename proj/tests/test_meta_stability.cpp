#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "scripted.hpp"
#include "stabsel/meta.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/solvers.hpp"
#include "stabsel/types.hpp"

using namespace stabsel;
using scripted::ReplaySelector;

namespace {

DatasetBundle plain_data(Eigen::Index n, int d, int t, std::uint64_t seed = 9) {
  Rng rng(seed);
  DatasetBundle b;
  b.shape = {d, t, n};
  b.design.resize(n, d);
  rng.fill_normal(b.design);
  b.response.resize(n, t);
  rng.fill_normal(b.response);
  return standardize(std::move(b));
}

meta::StabilityConfig config(int iterations, double threshold, std::uint64_t seed = 1) {
  meta::StabilityConfig cfg;
  cfg.iterations = iterations;
  cfg.threshold = threshold;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("two-iteration worked example") {
  // Iteration supports {(1,1),(2,1)} then {(2,1)}: tau = (0.5, 1.0),
  // q_hat = 1.5, and pi = 0.6 keeps only (2,1).
  const DatasetBundle data = plain_data(10, 2, 1);
  ReplaySelector selector({{{1, 1}, {2, 1}}, {{2, 1}}});
  const auto out = meta::stability_select(data, selector, 0.4, config(2, 0.6));

  CHECK(out.profile.counts == std::vector<int>{1, 2});
  CHECK(out.profile.tau() == std::vector<double>{0.5, 1.0});
  CHECK(out.profile.q_hat() == 1.5);
  CHECK(out.profile.failures == 0);
  CHECK(out.selection.pairs() == std::vector<Pair>{{2, 1}});
  CHECK(out.invocations == 2);
  CHECK(selector.calls() == 2);
}

TEST_CASE("threshold boundary is inclusive on integer counts") {
  const DatasetBundle data = plain_data(12, 3, 1);
  // Counts over I = 4: input 1 four times, input 2 three times, input 3 once.
  ReplaySelector selector({{{1, 1}, {2, 1}},
                           {{1, 1}, {2, 1}, {3, 1}},
                           {{1, 1}, {2, 1}},
                           {{1, 1}}});
  const auto out = meta::stability_select(data, selector, 0.4, config(4, 0.75));
  // pi * I = 3 exactly: count 3 must be included.
  CHECK(out.selection.pairs() == std::vector<Pair>{{1, 1}, {2, 1}});
  CHECK(out.profile.q_hat() == doctest::Approx(8.0 / 4.0).epsilon(1e-15));

  // pi = 1.0 is the intersection of all iterations.
  ReplaySelector again({{{1, 1}, {2, 1}},
                        {{1, 1}, {2, 1}, {3, 1}},
                        {{1, 1}, {2, 1}},
                        {{1, 1}}});
  const auto all = meta::stability_select(data, again, 0.4, config(4, 1.0));
  CHECK(all.selection.pairs() == std::vector<Pair>{{1, 1}});
}

TEST_CASE("failed iterations count as empty selections") {
  const DatasetBundle data = plain_data(10, 2, 1);
  ReplaySelector selector({{{1, 1}}, {{1, 1}}, {{1, 1}}},
                          {false, true, false});
  const auto out = meta::stability_select(data, selector, 0.4, config(3, 0.6));
  CHECK(out.profile.failures == 1);
  CHECK(out.profile.counts == std::vector<int>{2, 0});
  CHECK(out.profile.iteration_sizes == std::vector<int>{1, 0, 1});
  CHECK(out.profile.q_hat() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // 2/3 >= 0.6: still selected.
  CHECK(out.selection.pairs() == std::vector<Pair>{{1, 1}});
}

TEST_CASE("multi-output profiles use flat indexing") {
  const DatasetBundle data = plain_data(10, 2, 2);
  ReplaySelector selector({{{1, 2}, {2, 1}}, {{1, 2}}});
  const auto out = meta::stability_select(data, selector, 0.4, config(2, 0.9));
  // flat = (input-1) + d*(output-1): (2,1) -> 1, (1,2) -> 2.
  CHECK(out.profile.counts == std::vector<int>{0, 1, 2, 0});
  CHECK(out.selection.pairs() == std::vector<Pair>{{1, 2}});
}

TEST_CASE("q_hat is an exact integer ratio") {
  meta::StabilityProfile profile;
  profile.shape = {3, 1, 10};
  profile.counts = {7, 11, 2};
  profile.iterations = 20;
  // Summed as integers first: 20/20 is exactly 1, with no float drift.
  CHECK(profile.q_hat() == 1.0);
  profile.counts = {7, 11, 3};
  CHECK(profile.q_hat() == 21.0 / 20.0);
}

TEST_CASE("threshold_profile validates pi and is monotone") {
  meta::StabilityProfile profile;
  profile.shape = {4, 1, 10};
  profile.counts = {10, 7, 5, 1};
  profile.iterations = 10;
  CHECK_THROWS_AS(meta::threshold_profile(profile, 0.5), DataError);
  CHECK_THROWS_AS(meta::threshold_profile(profile, 1.01), DataError);
  Selection prev;
  for (double pi : {0.55, 0.6, 0.7, 0.8, 0.9, 1.0}) {
    const Selection s = meta::threshold_profile(profile, pi);
    if (pi > 0.55) {
      for (int k : s.flat()) CHECK(prev.contains(k));  // shrinking in pi
    }
    prev = s;
  }
  CHECK(meta::threshold_profile(profile, 0.7).size() == 2);
  CHECK(meta::threshold_profile(profile, 1.0).size() == 1);
}

TEST_CASE("stability inputs are validated") {
  const DatasetBundle data = plain_data(10, 2, 1);
  ReplaySelector selector({{{1, 1}}});
  meta::StabilityConfig cfg = config(10, 0.9);
  cfg.subsample_fraction = 0.0;
  CHECK_THROWS_AS(meta::stability_select(data, selector, 0.4, cfg), DataError);
  cfg.subsample_fraction = 1.0;
  CHECK_THROWS_AS(meta::stability_select(data, selector, 0.4, cfg), DataError);
  cfg = config(0, 0.9);
  CHECK_THROWS_AS(meta::stability_select(data, selector, 0.4, cfg), DataError);
  cfg = config(10, 0.5);
  CHECK_THROWS_AS(meta::stability_select(data, selector, 0.4, cfg), DataError);
  // floor(p * N) must leave at least 2 rows.
  const DatasetBundle tiny = plain_data(3, 2, 1);
  cfg = config(10, 0.9);
  cfg.subsample_fraction = 0.51;
  CHECK_THROWS_AS(meta::stability_select(tiny, selector, 0.4, cfg), DataError);
}

TEST_CASE("subsample_rows draws floor(pN) distinct sorted rows per iteration") {
  meta::StabilityConfig cfg = config(6, 0.9, 77);
  cfg.subsample_fraction = 0.5;
  for (int iter = 0; iter < 6; ++iter) {
    const auto rows = meta::subsample_rows(11, cfg, iter);
    REQUIRE(rows.size() == 5);  // floor(0.5 * 11)
    CHECK(std::is_sorted(rows.begin(), rows.end()));
    CHECK(std::adjacent_find(rows.begin(), rows.end()) == rows.end());
    CHECK(rows.front() >= 0);
    CHECK(rows.back() < 11);
    CHECK(rows == meta::subsample_rows(11, cfg, iter));  // deterministic
  }
  // Iterations draw different subsets (draws are independent streams).
  CHECK(meta::subsample_rows(11, cfg, 0) != meta::subsample_rows(11, cfg, 1));
  // Seed changes the draw.
  meta::StabilityConfig other = cfg;
  other.seed = 78;
  CHECK(meta::subsample_rows(11, cfg, 0) != meta::subsample_rows(11, other, 0));
}

TEST_CASE("stability_path points match stability_select at each grid value") {
  const DatasetBundle data = plain_data(30, 5, 1, 4);
  meta::SubAlgorithm sub;
  sub.algorithm = solvers::AlgorithmId::kLasso;
  meta::SolverSelector selector(sub);
  const double lm = solvers::lambda_max(data, solvers::AlgorithmId::kLasso);
  const std::vector<double> grid{0.8 * lm, 0.5 * lm, 0.25 * lm};
  const meta::StabilityConfig cfg = config(8, 0.6, 3);

  meta::SolverSelector path_selector(sub);
  const auto path = meta::stability_path(data, path_selector, grid, cfg);
  REQUIRE(path.size() == 3);
  for (size_t l = 0; l < grid.size(); ++l) {
    meta::SolverSelector fresh(sub);
    const auto single = meta::stability_select(data, fresh, grid[l], cfg);
    CHECK(path[l].lambda == grid[l]);
    CHECK(path[l].profile.counts == single.profile.counts);
    CHECK(path[l].selection == single.selection);
  }
}

TEST_CASE("invocation count equals the iteration count") {
  const DatasetBundle data = plain_data(20, 3, 1);
  meta::SubAlgorithm sub;
  meta::SolverSelector inner(sub);
  meta::CountingSelector counting(inner);
  const auto out = meta::stability_select(data, counting, 0.2, config(17, 0.9));
  CHECK(counting.count() == 17);
  CHECK(out.invocations == 17);
}

TEST_CASE("stability on real data recovers a strong signal") {
  // y = x1 + small noise: (1,1) survives every subsample at moderate lambda.
  Rng rng(15);
  DatasetBundle b;
  b.shape = {6, 1, 60};
  b.design.resize(60, 6);
  rng.fill_normal(b.design);
  Eigen::MatrixXd noise(60, 1);
  rng.fill_normal(noise);
  b.response = b.design.col(0) + 0.05 * noise;
  b = standardize(std::move(b));

  meta::SubAlgorithm sub;
  sub.penalty.lambda = 0.3;
  const auto out = meta::stability_select(b, sub, config(20, 0.9, 5));
  CHECK(out.selection.contains(0));
  CHECK(out.profile.tau()[0] == 1.0);
}
