#include <cmath>
#include <vector>

#include <doctest.h>

#include "scripted.hpp"
#include "stabsel/meta.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/stats.hpp"
#include "stabsel/types.hpp"

using namespace stabsel;
using scripted::ReplaySelector;

namespace {

DatasetBundle sac_data(Eigen::Index n, int d, std::uint64_t seed, double noise_scale = 0.3) {
  Rng rng(seed);
  DatasetBundle b;
  b.shape = {d, 1, n};
  b.design.resize(n, d);
  rng.fill_normal(b.design);
  Eigen::MatrixXd noise(n, 1);
  rng.fill_normal(noise);
  b.response = b.design.col(0) + noise_scale * noise;
  return b;
}

}  // namespace

TEST_CASE("never-screened pairs carry the worst-case pseudo-p exactly") {
  const int d = 3;
  const DatasetBundle data = sac_data(16, d, 101);
  ReplaySelector empty_screen(std::vector<std::vector<Pair>>{{}});
  meta::SacConfig cfg;
  cfg.splits = 2;
  cfg.folds = 2;
  cfg.seed = 5;

  cfg.threshold = 1.0;
  auto result = meta::screen_and_clean(data, empty_screen, cfg);
  const double worst = static_cast<double>(d);  // d * t with t = 1
  for (int i = 0; i < d; ++i) CHECK(result.p_values(i, 0) == worst);
  CHECK(result.selection.empty());
  CHECK(result.truncations == 0);
  CHECK(result.rank_drops == 0);

  // The selection boundary is inclusive.
  cfg.threshold = worst;
  ReplaySelector again(std::vector<std::vector<Pair>>{{}});
  result = meta::screen_and_clean(data, again, cfg);
  CHECK(result.selection.size() == d);
  cfg.threshold = worst - 0.5;
  ReplaySelector once_more(std::vector<std::vector<Pair>>{{}});
  result = meta::screen_and_clean(data, once_more, cfg);
  CHECK(result.selection.empty());
}

TEST_CASE("single screened pair passes through the clean regression") {
  const Eigen::Index n = 24;
  const int d = 4;
  const DatasetBundle data = sac_data(n, d, 202);
  ReplaySelector screen({{{1, 1}}});
  meta::CountingSelector counting(screen);
  meta::SacConfig cfg;
  cfg.splits = 1;
  cfg.folds = 10;
  cfg.seed = 17;

  const auto result = meta::screen_and_clean(data, counting, cfg);

  // Support of size one never trips the half-training-rows cutoff, so the
  // screen CV walks the full capped grid.
  CHECK(result.invocations == cfg.folds * meta::kMaxCvGridLength + 1);
  CHECK(counting.count() == result.invocations);
  CHECK(result.truncations == 0);
  CHECK(result.rank_drops == 0);

  // Hand-rolled clean phase: shard 2 is the back half of the split order,
  // the multiplier is |screened| * t = 1, and with one split BH is the
  // identity, so the combined value is the raw OLS p exactly.
  const auto order = meta::split_order(n, cfg, 0);
  const DatasetBundle shard2 =
      data.rows(std::vector<int>(order.begin() + static_cast<std::ptrdiff_t>(n / 2), order.end()));
  const Eigen::MatrixXd x_clean = shard2.design.col(0);
  const auto clean = stats::ols_tstats(x_clean, shard2.response.col(0));
  REQUIRE(clean.ok);
  CHECK(result.p_values(0, 0) == clean.p_values[0]);

  for (int i = 1; i < d; ++i) CHECK(result.p_values(i, 0) == static_cast<double>(d));
  CHECK(result.selection.size() == 1);
  CHECK(result.selection.contains(0));
}

TEST_CASE("oversized screened sets are truncated to half the shard rows") {
  const Eigen::Index n = 12;  // shard 2 has 6 rows, cap = 3
  const int d = 8;
  const DatasetBundle data = sac_data(n, d, 303);
  std::vector<Pair> full;
  for (int i = 1; i <= d; ++i) full.push_back({i, 1});
  ReplaySelector screen({full});
  meta::SacConfig cfg;
  cfg.splits = 1;
  cfg.folds = 2;
  cfg.seed = 9;

  const auto result = meta::screen_and_clean(data, screen, cfg);
  CHECK(result.truncations == 1);
  CHECK(result.rank_drops == 0);

  // Scripted coefficients grow with the pair index, so the kept three are
  // the last three inputs; the rest keep the worst-case value d * t = 8.
  for (int i = 0; i < 5; ++i) CHECK(result.p_values(i, 0) == 8.0);
  for (int i = 5; i < 8; ++i) CHECK(result.p_values(i, 0) <= 3.0);  // raw p times multiplier 3
}

TEST_CASE("exactly collinear screened predictors are dropped from the clean fit") {
  Rng rng(404);
  const Eigen::Index n = 16;
  DatasetBundle data;
  data.shape = {3, 1, n};
  data.design.resize(n, 3);
  rng.fill_normal(data.design);
  data.design.col(1) = data.design.col(0);  // exact duplicate
  Eigen::MatrixXd noise(n, 1);
  rng.fill_normal(noise);
  data.response = data.design.col(0) + 0.1 * noise;

  ReplaySelector screen({{{1, 1}, {2, 1}}});
  meta::SacConfig cfg;
  cfg.splits = 1;
  cfg.folds = 2;
  cfg.seed = 31;

  const auto result = meta::screen_and_clean(data, screen, cfg);
  // Input 2 has the larger screening coefficient, so it enters first and
  // input 1 is the redundant direction.
  CHECK(result.rank_drops == 1);
  CHECK(result.truncations == 0);
  CHECK(result.p_values(0, 0) == 3.0);  // dropped pair keeps the worst case
  CHECK(result.p_values(1, 0) < 1.0);
  CHECK(result.p_values(2, 0) == 3.0);
  CHECK(result.selection.size() == 1);
  CHECK(result.selection.contains(1));
}

TEST_CASE("pseudo-p-values land at the screened pair in output-major order") {
  Rng rng(505);
  const Eigen::Index n = 20;
  const int d = 3;
  const int t = 2;
  DatasetBundle data;
  data.shape = {d, t, n};
  data.design.resize(n, d);
  rng.fill_normal(data.design);
  Eigen::MatrixXd noise(n, t);
  rng.fill_normal(noise);
  data.response.resize(n, t);
  data.response.col(0) = noise.col(0);
  data.response.col(1) = data.design.col(1) + 0.3 * noise.col(1);

  ReplaySelector screen({{{2, 2}}});
  meta::SacConfig cfg;
  cfg.splits = 1;
  cfg.folds = 2;
  cfg.seed = 77;

  const auto result = meta::screen_and_clean(data, screen, cfg);
  const double worst = static_cast<double>(d * t);
  for (int j = 0; j < t; ++j)
    for (int i = 0; i < d; ++i)
      if (!(i == 1 && j == 1)) CHECK(result.p_values(i, j) == worst);
  CHECK(result.p_values(1, 1) < worst);
  CHECK(result.selection.contains(1 + d * 1));
}

TEST_CASE("screen-and-clean finds a strong signal with the production selector") {
  const DatasetBundle data = standardize(sac_data(60, 5, 606, 0.2));
  meta::SubAlgorithm sub;
  meta::SacConfig cfg;
  cfg.splits = 2;
  cfg.folds = 4;
  cfg.seed = 13;
  const auto result = meta::screen_and_clean(data, sub, cfg);
  CHECK(result.selection.contains(0));
  CHECK(result.p_values(0, 0) < 0.05);
}

TEST_CASE("same seed reproduces the run, a different seed moves it") {
  const DatasetBundle data = sac_data(20, 3, 707);
  meta::SacConfig cfg;
  cfg.splits = 2;
  cfg.folds = 2;
  cfg.seed = 1;
  ReplaySelector a({{{1, 1}}});
  ReplaySelector b({{{1, 1}}});
  const auto first = meta::screen_and_clean(data, a, cfg);
  const auto second = meta::screen_and_clean(data, b, cfg);
  CHECK(first.p_values == second.p_values);
  CHECK(first.invocations == second.invocations);
  CHECK(first.selection == second.selection);

  cfg.seed = 2;
  ReplaySelector c({{{1, 1}}});
  const auto third = meta::screen_and_clean(data, c, cfg);
  CHECK(first.p_values != third.p_values);
}

TEST_CASE("screen-and-clean validates its configuration") {
  const DatasetBundle data = sac_data(12, 3, 808);
  ReplaySelector screen({{{1, 1}}});
  meta::SacConfig cfg;
  cfg.splits = 0;
  CHECK_THROWS_AS(meta::screen_and_clean(data, screen, cfg), DataError);
  cfg.splits = 1;
  cfg.folds = 1;
  CHECK_THROWS_AS(meta::screen_and_clean(data, screen, cfg), DataError);
  cfg.folds = 2;
  cfg.threshold = 0.0;
  CHECK_THROWS_AS(meta::screen_and_clean(data, screen, cfg), DataError);
  cfg.threshold = 1.0;
  const DatasetBundle tiny = sac_data(3, 2, 809);
  CHECK_THROWS_AS(meta::screen_and_clean(tiny, screen, cfg), DataError);
}
