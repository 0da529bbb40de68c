#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "stabsel/meta.hpp"
#include "stabsel/rng.hpp"

namespace stabsel::meta {

std::vector<std::vector<int>> fold_assignment(Eigen::Index n_samples, int folds,
                                              std::uint64_t seed) {
  std::vector<int> order(static_cast<size_t>(n_samples));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {kStreamFolds}));
  rng.shuffle(order);

  const int n = static_cast<int>(n_samples);
  const int base = n / folds;
  const int extra = n % folds;
  std::vector<std::vector<int>> chunks(static_cast<size_t>(folds));
  int at = 0;
  for (int f = 0; f < folds; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    chunks[static_cast<size_t>(f)].assign(order.begin() + at, order.begin() + at + size);
    at += size;
  }
  return chunks;
}

namespace {

std::vector<int> support_of_output(const Eigen::MatrixXd& coef, Eigen::Index j) {
  std::vector<int> members;
  for (Eigen::Index i = 0; i < coef.rows(); ++i)
    if (std::abs(coef(i, j)) >= solvers::kSupportThreshold) members.push_back(static_cast<int>(i));
  return members;
}

// Keep the `keep` members with largest |coef|, ties toward smaller index.
void truncate_by_magnitude(std::vector<int>& members, const Eigen::MatrixXd& coef, Eigen::Index j,
                           int keep) {
  if (static_cast<int>(members.size()) <= keep) return;
  std::stable_sort(members.begin(), members.end(), [&](int a, int b) {
    return std::abs(coef(a, j)) > std::abs(coef(b, j));
  });
  members.resize(static_cast<size_t>(std::max(keep, 0)));
  std::sort(members.begin(), members.end());
}

// Least-squares refit of one output on the given rows restricted to
// `members`, with intercept; returns the sum of squared residuals on those
// same rows. Empty support is the zero function (no intercept).
double refit_sse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& members) {
  if (members.empty()) return y.squaredNorm();
  Eigen::MatrixXd design(x.rows(), static_cast<Eigen::Index>(members.size()) + 1);
  design.col(0).setOnes();
  for (size_t k = 0; k < members.size(); ++k)
    design.col(static_cast<Eigen::Index>(k) + 1) = x.col(members[k]);
  Eigen::VectorXd coef = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(design).solve(y);
  return (y - design * coef).squaredNorm();
}

}  // namespace

CvResult cross_validate(const DatasetBundle& data, Selector& selector, const CVConfig& cfg) {
  data.validate();
  if (cfg.folds < 2) throw DataError("cross_validate: folds must be at least 2");
  if (static_cast<Eigen::Index>(cfg.folds) > data.shape.n_samples)
    throw DataError("cross_validate: more folds than samples");
  if (!(cfg.decay > 0.0 && cfg.decay < 1.0))
    throw DataError("cross_validate: decay must lie in (0, 1)");

  const auto chunks = fold_assignment(data.shape.n_samples, cfg.folds, cfg.seed);
  const Eigen::Index t = data.shape.n_outputs;

  struct Fold {
    DatasetBundle train;
    DatasetBundle validation;
    Eigen::MatrixXd warm;
    bool have_warm = false;
  };
  std::vector<Fold> folds(chunks.size());
  for (size_t f = 0; f < chunks.size(); ++f) {
    std::vector<int> train_idx;
    for (size_t g = 0; g < chunks.size(); ++g)
      if (g != f) train_idx.insert(train_idx.end(), chunks[g].begin(), chunks[g].end());
    folds[f].train = data.rows(train_idx);
    folds[f].validation = data.rows(chunks[f]);
  }

  double lambda_top = 0.0;
  for (auto& fold : folds) lambda_top = std::max(lambda_top, selector.lambda_max(fold.train));
  if (!(lambda_top > 0.0)) throw DataError("cross_validate: lambda_max is zero, response is orthogonal to the design");

  CvResult result;
  bool any_nonempty = false;

  for (int l = 0; l < kMaxCvGridLength; ++l) {
    const double lambda = lambda_top * std::pow(cfg.decay, l);
    bool cutoff = false;
    double error_sum = 0.0;

    for (auto& fold : folds) {
      auto report = selector.fit(fold.train, lambda, fold.have_warm ? &fold.warm : nullptr);
      result.invocations += 1;
      fold.warm = report.coefficients.values;
      fold.have_warm = fold.warm.size() > 0;

      const Eigen::Index n_train = fold.train.shape.n_samples;
      const Eigen::Index n_val = fold.validation.shape.n_samples;
      double sse = 0.0;
      for (Eigen::Index j = 0; j < t; ++j) {
        auto members = support_of_output(fold.warm, j);
        if (2 * static_cast<Eigen::Index>(members.size()) > n_train) cutoff = true;
        if (!members.empty()) any_nonempty = true;
        truncate_by_magnitude(members, fold.warm, j, static_cast<int>(n_val) - 2);
        sse += refit_sse(fold.validation.design, fold.validation.response.col(j), members);
      }
      error_sum += sse / static_cast<double>(n_val * t);
    }

    // The cutoff λ itself is past the reliability rule, so exclude it;
    // the top of the grid is always kept so the table is never empty.
    if (cutoff && l > 0) break;
    result.table.push_back({lambda, error_sum / static_cast<double>(folds.size())});
    if (cutoff) break;
  }

  size_t best = 0;
  for (size_t l = 1; l < result.table.size(); ++l)
    if (result.table[l].mean_validation_error <
        result.table[best].mean_validation_error)
      best = l;
  result.all_empty = !any_nonempty;
  result.chosen_lambda = result.all_empty ? result.table.front().lambda : result.table[best].lambda;

  auto final_fit = selector.fit(data, result.chosen_lambda, nullptr);
  result.invocations += 1;
  result.selection = final_fit.coefficients.support();
  result.coefficients = final_fit.coefficients.values;
  return result;
}

CvResult cross_validate(const DatasetBundle& data, const SubAlgorithm& sub, const CVConfig& cfg) {
  SolverSelector selector(sub);
  return cross_validate(data, selector, cfg);
}

}  // namespace stabsel::meta
