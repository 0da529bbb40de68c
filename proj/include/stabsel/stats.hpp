#pragma once

#include <vector>

#include <Eigen/Core>

#include "stabsel/types.hpp"

namespace stabsel::stats {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1],
/// by the Lentz continued fraction with the symmetry switch at
/// x > (a+1)/(a+b+2).
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with nu > 0 degrees of freedom.
double student_t_cdf(double t, double nu);

/// Two-sided p-value for a t statistic: 2(1 - F(|t|)).
double two_sided_p(double t, double nu);

struct OlsFit {
  Eigen::VectorXd coefficients;  // regressors only, intercept excluded
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;      // two-sided, df = n - p - 1
  double sigma2 = 0.0;           // unbiased residual variance
  bool ok = false;               // false when rank deficient or df < 1
};

/// OLS of y on [1, X] by Householder QR. An intercept column is always
/// added and never reported. `ok` is false when the augmented matrix is
/// rank deficient (relative singular value below 1e-10) or there are no
/// residual degrees of freedom; coefficient arrays are empty in that case.
OlsFit ols_tstats(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Benjamini-Hochberg step-up adjustment: adjusted_(i) = min_{j >= i}
/// p_(j) * m / j in the sorted order, mapped back to input order. Values
/// are not clipped at 1, so pseudo-p inputs above 1 pass through scaled.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

}  // namespace stabsel::stats
