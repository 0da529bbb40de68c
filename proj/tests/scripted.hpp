#pragma once

// Deterministic selector stubs the regime drivers are verified against.

#include <functional>
#include <stdexcept>
#include <vector>

#include "stabsel/meta.hpp"
#include "stabsel/solvers.hpp"
#include "stabsel/types.hpp"

namespace scripted {

inline stabsel::solvers::FitReport report_with_support(const stabsel::ProblemShape& shape,
                                                       const std::vector<stabsel::Pair>& support,
                                                       bool converged = true) {
  stabsel::solvers::FitReport report;
  report.coefficients.shape = shape;
  report.coefficients.shape.n_samples = shape.n_samples;
  report.coefficients.values = Eigen::MatrixXd::Zero(shape.n_inputs, shape.n_outputs);
  double magnitude = 1.0;
  for (const auto& p : support) {
    report.coefficients.values(p.input - 1, p.output - 1) = magnitude;
    magnitude += 0.5;  // distinct magnitudes so ranking is deterministic
  }
  report.converged = converged;
  report.objective_value = 0.0;
  return report;
}

/// Replays a fixed list of supports in call order, cycling when exhausted.
/// Optional per-call failure flags mark fits as non-converged.
class ReplaySelector : public stabsel::meta::Selector {
 public:
  explicit ReplaySelector(std::vector<std::vector<stabsel::Pair>> supports,
                          std::vector<bool> failures = {}, double lambda_max_value = 1.0)
      : supports_(std::move(supports)),
        failures_(std::move(failures)),
        lambda_max_(lambda_max_value) {}

  double lambda_max(const stabsel::DatasetBundle&) override { return lambda_max_; }

  stabsel::solvers::FitReport fit(const stabsel::DatasetBundle& data, double,
                                  const Eigen::MatrixXd*) override {
    const size_t call = calls_++;
    const auto& support = supports_[call % supports_.size()];
    const bool failed = !failures_.empty() && failures_[call % failures_.size()];
    return report_with_support(data.shape, support, !failed);
  }

  size_t calls() const { return calls_; }

 private:
  std::vector<std::vector<stabsel::Pair>> supports_;
  std::vector<bool> failures_;
  double lambda_max_;
  size_t calls_ = 0;
};

/// Computes the support from a user function of (data, lambda); stays
/// deterministic as the Selector contract requires.
class RuleSelector : public stabsel::meta::Selector {
 public:
  using Rule = std::function<std::vector<stabsel::Pair>(const stabsel::DatasetBundle&, double)>;
  RuleSelector(Rule rule, double lambda_max_value = 1.0)
      : rule_(std::move(rule)), lambda_max_(lambda_max_value) {}

  double lambda_max(const stabsel::DatasetBundle&) override { return lambda_max_; }

  stabsel::solvers::FitReport fit(const stabsel::DatasetBundle& data, double lambda,
                                  const Eigen::MatrixXd*) override {
    return report_with_support(data.shape, rule_(data, lambda));
  }

 private:
  Rule rule_;
  double lambda_max_;
};

}  // namespace scripted
