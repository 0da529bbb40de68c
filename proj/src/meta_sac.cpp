#include <algorithm>
#include <cmath>
#include <numeric>

#include "stabsel/meta.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/stats.hpp"

namespace stabsel::meta {

namespace {

// Greedy rank-safe predictor filter: candidates enter in ranking order and
// are kept while they add a direction to the span (modified Gram-Schmidt,
// relative tolerance 1e-10) and the regression retains a residual degree
// of freedom. Returns kept flags per candidate.
std::vector<bool> rank_safe_keep(const Eigen::MatrixXd& x, const std::vector<int>& candidates) {
  const Eigen::Index n = x.rows();
  const int max_kept = static_cast<int>(n) - 2;  // intercept + kept ≤ n - 1
  Eigen::MatrixXd basis(n, std::min<Eigen::Index>(n, static_cast<Eigen::Index>(candidates.size()) + 1));
  basis.col(0) = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::Index used = 1;

  std::vector<bool> keep(candidates.size(), false);
  int kept = 0;
  for (size_t c = 0; c < candidates.size(); ++c) {
    if (kept >= max_kept) break;
    Eigen::VectorXd v = x.col(candidates[c]);
    const double original = std::max(v.norm(), 1.0);
    for (int pass = 0; pass < 2; ++pass)
      v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
    if (v.norm() > 1e-10 * original) {
      basis.col(used++) = v / v.norm();
      keep[c] = true;
      ++kept;
    }
  }
  return keep;
}

}  // namespace

std::vector<int> split_order(Eigen::Index n_samples, const SacConfig& cfg, int split) {
  std::vector<int> order(static_cast<size_t>(n_samples));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, {kStreamSplit, static_cast<std::uint64_t>(split)}));
  rng.shuffle(order);
  return order;
}

SacResult screen_and_clean(const DatasetBundle& data, Selector& selector, const SacConfig& cfg) {
  data.validate();
  if (cfg.splits < 1) throw DataError("screen_and_clean: splits must be at least 1");
  if (cfg.folds < 2) throw DataError("screen_and_clean: folds must be at least 2");
  if (!(cfg.threshold > 0.0)) throw DataError("screen_and_clean: threshold must be positive");
  if (data.shape.n_samples < 4) throw DataError("screen_and_clean: needs at least 4 samples");

  const int d = data.shape.n_inputs;
  const int t = data.shape.n_outputs;
  const Eigen::Index n = data.shape.n_samples;
  const double worst_p = static_cast<double>(d) * static_cast<double>(t);

  // streams(pair, split): pseudo-p-values to be BH-combined per pair
  Eigen::MatrixXd streams(static_cast<Eigen::Index>(d) * t, cfg.splits);
  streams.setConstant(worst_p);

  SacResult result;

  for (int split = 0; split < cfg.splits; ++split) {
    const std::vector<int> order = split_order(n, cfg, split);
    const auto half = order.begin() + static_cast<std::ptrdiff_t>(n / 2);
    DatasetBundle shard1 = data.rows(std::vector<int>(order.begin(), half));
    DatasetBundle shard2 = data.rows(std::vector<int>(half, order.end()));

    CVConfig cv_cfg;
    cv_cfg.folds = cfg.folds;
    cv_cfg.seed = derive_seed(cfg.seed, {kStreamSplit, static_cast<std::uint64_t>(split), kStreamFolds});
    CvResult screen = cross_validate(shard1, selector, cv_cfg);
    result.invocations += screen.invocations;

    const Eigen::Index n2 = shard2.shape.n_samples;
    for (int j = 0; j < t; ++j) {
      std::vector<int> members;
      for (int i = 0; i < d; ++i)
        if (screen.selection.contains(i + d * j)) members.push_back(i);
      if (members.empty()) continue;

      // Ranking order for truncation and rank drops: largest screening
      // coefficient first, ties toward the smaller input index.
      std::stable_sort(members.begin(), members.end(), [&](int a, int b) {
        return std::abs(screen.coefficients(a, j)) > std::abs(screen.coefficients(b, j));
      });
      const auto cap = static_cast<size_t>(n2 / 2);
      if (members.size() > cap) {
        members.resize(cap);
        ++result.truncations;
      }
      const double multiplier = static_cast<double>(members.size()) * static_cast<double>(t);

      const auto keep = rank_safe_keep(shard2.design, members);
      std::vector<int> kept;
      for (size_t c = 0; c < members.size(); ++c)
        if (keep[c]) kept.push_back(members[c]);
      result.rank_drops += static_cast<int>(members.size() - kept.size());

      stats::OlsFit clean;
      if (!kept.empty()) {
        Eigen::MatrixXd x_clean(n2, static_cast<Eigen::Index>(kept.size()));
        for (size_t c = 0; c < kept.size(); ++c)
          x_clean.col(static_cast<Eigen::Index>(c)) = shard2.design.col(kept[c]);
        clean = stats::ols_tstats(x_clean, shard2.response.col(j));
      }
      // Screened pairs default to d·t (already set); overwrite the cleaned
      // ones with raw p × |S_iter(j)| × t.
      if (clean.ok)
        for (size_t c = 0; c < kept.size(); ++c)
          streams(kept[c] + static_cast<Eigen::Index>(d) * j, split) =
              clean.p_values[static_cast<Eigen::Index>(c)] * multiplier;
      else
        result.rank_drops += static_cast<int>(kept.size());
    }
  }

  result.p_values.resize(d, t);
  std::vector<int> selected;
  for (Eigen::Index f = 0; f < streams.rows(); ++f) {
    std::vector<double> stream(streams.row(f).begin(), streams.row(f).end());
    const auto adjusted = stats::bh_adjust(stream);
    result.p_values(f % d, f / d) = *std::min_element(adjusted.begin(), adjusted.end());
    if (result.p_values(f % d, f / d) <= cfg.threshold) selected.push_back(static_cast<int>(f));
  }
  result.selection = Selection::from_flat(data.shape, std::move(selected));
  return result;
}

SacResult screen_and_clean(const DatasetBundle& data, const SubAlgorithm& sub,
                           const SacConfig& cfg) {
  SolverSelector selector(sub);
  return screen_and_clean(data, selector, cfg);
}

}  // namespace stabsel::meta
