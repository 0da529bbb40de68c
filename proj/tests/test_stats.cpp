#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "stabsel/rng.hpp"
#include "stabsel/stats.hpp"
#include "stabsel/types.hpp"

using namespace stabsel;

TEST_CASE("incomplete beta closed forms") {
  using stats::incomplete_beta;
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.82, 1.0}) {
    CHECK(incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(incomplete_beta(2.0, 1.0, x) == doctest::Approx(x * x).epsilon(1e-12));
    CHECK(incomplete_beta(1.0, 3.0, x) ==
          doctest::Approx(1.0 - std::pow(1.0 - x, 3.0)).epsilon(1e-12));
  }
  // Symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
  for (double x : {0.05, 0.3, 0.6, 0.95})
    CHECK(incomplete_beta(2.5, 4.0, x) ==
          doctest::Approx(1.0 - incomplete_beta(4.0, 2.5, 1.0 - x)).epsilon(1e-12));
}

TEST_CASE("t CDF matches the density integration oracle") {
  for (double nu : {3.0, 10.0, 30.0, 100.0})
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
      const double expected = oracles::t_cdf_by_integration(t, nu);
      CHECK(stats::student_t_cdf(t, nu) == doctest::Approx(expected).epsilon(1e-4));
      CHECK(std::abs(stats::student_t_cdf(t, nu) - expected) < 1e-4);
      CHECK(std::abs(stats::student_t_cdf(-t, nu) - (1.0 - expected)) < 1e-4);
    }
}

TEST_CASE("t CDF closed forms at nu = 1 and nu = 2") {
  for (double t : {-3.0, -0.7, 0.0, 0.4, 1.0, 2.5, 8.0}) {
    const double cauchy = 0.5 + std::atan(t) / M_PI;
    CHECK(stats::student_t_cdf(t, 1.0) == doctest::Approx(cauchy).epsilon(1e-10));
    const double two = 0.5 + t / (2.0 * std::sqrt(2.0 + t * t));
    CHECK(stats::student_t_cdf(t, 2.0) == doctest::Approx(two).epsilon(1e-10));
  }
}

TEST_CASE("t CDF symmetry and center") {
  for (double nu : {1.0, 2.0, 5.0, 17.0, 120.0}) {
    CHECK(stats::student_t_cdf(0.0, nu) == doctest::Approx(0.5).epsilon(1e-12));
    for (double t : {0.3, 1.7, 4.2})
      CHECK(stats::student_t_cdf(t, nu) + stats::student_t_cdf(-t, nu) ==
            doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("two-sided p-values") {
  CHECK(stats::two_sided_p(0.0, 7.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats::two_sided_p(2.0, 10.0) == doctest::Approx(0.0734).epsilon(1e-2));
  CHECK(stats::two_sided_p(2.0, 10.0) ==
        doctest::Approx(oracles::two_sided_p_by_integration(2.0, 10.0)).epsilon(1e-4));
  CHECK(stats::two_sided_p(-2.0, 10.0) == stats::two_sided_p(2.0, 10.0));
  CHECK(stats::two_sided_p(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  // Monotone decreasing in |t|.
  CHECK(stats::two_sided_p(3.0, 8.0) < stats::two_sided_p(2.0, 8.0));
}

TEST_CASE("ols_tstats matches simple-regression closed forms") {
  // One regressor plus intercept: everything has a textbook formula.
  const int n = 9;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  x << 0.2, 1.1, 1.9, 3.2, 3.9, 5.1, 6.0, 7.2, 7.8;
  y << 1.1, 0.7, 2.3, 2.0, 3.8, 3.2, 4.9, 4.6, 6.1;

  const double xbar = x.col(0).mean();
  const double ybar = y.mean();
  const double sxx = (x.col(0).array() - xbar).square().sum();
  const double sxy = ((x.col(0).array() - xbar) * (y.array() - ybar)).sum();
  const double slope = sxy / sxx;
  const double intercept = ybar - slope * xbar;
  Eigen::VectorXd resid = y - (intercept + (slope * x.col(0).array())).matrix();
  const double sigma2 = resid.squaredNorm() / (n - 2);
  const double se = std::sqrt(sigma2 / sxx);

  const stats::OlsFit fit = stats::ols_tstats(x, y);
  REQUIRE(fit.ok);
  REQUIRE(fit.coefficients.size() == 1);
  CHECK(fit.coefficients[0] == doctest::Approx(slope).epsilon(1e-10));
  CHECK(fit.sigma2 == doctest::Approx(sigma2).epsilon(1e-10));
  CHECK(fit.t_stats[0] == doctest::Approx(slope / se).epsilon(1e-10));
  CHECK(fit.p_values[0] ==
        doctest::Approx(oracles::two_sided_p_by_integration(slope / se, n - 2)).epsilon(1e-6));
}

TEST_CASE("ols_tstats on a perfect fit drives p to zero") {
  const int n = 12;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = i;
    x(i, 1) = (i * i) % 5;
    y(i) = 2.0 + 3.0 * x(i, 0) - 1.5 * x(i, 1);
  }
  const stats::OlsFit fit = stats::ols_tstats(x, y);
  REQUIRE(fit.ok);
  CHECK(fit.p_values[0] <= 1e-12);
  CHECK(fit.p_values[1] <= 1e-12);
  CHECK(fit.coefficients[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("ols_tstats flags rank deficiency and exhausted dof") {
  Eigen::MatrixXd x(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = i + 1.0;
    x(i, 1) = 2.0 * (i + 1.0);  // exact duplicate direction
    y(i) = i * 0.7;
  }
  CHECK_FALSE(stats::ols_tstats(x, y).ok);

  Eigen::MatrixXd wide(3, 2);
  wide << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd y3(3);
  y3 << 1, 2, 3;
  // n - p - 1 = 0 residual degrees of freedom.
  CHECK_FALSE(stats::ols_tstats(wide, y3).ok);
}

TEST_CASE("bh_adjust matches the worked four-value example") {
  const std::vector<double> p{0.01, 0.03, 0.04, 0.5};
  const auto adj = stats::bh_adjust(p);
  REQUIRE(adj.size() == 4);
  CHECK(adj[0] == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(adj[1] == doctest::Approx(0.04 * 4.0 / 3.0).epsilon(1e-12));
  CHECK(adj[2] == doctest::Approx(0.04 * 4.0 / 3.0).epsilon(1e-12));
  CHECK(adj[3] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bh_adjust equals the suffix-min oracle exactly") {
  Rng rng(424242);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t m = 1 + rng.uniform_below(6);
    std::vector<double> p(m);
    for (auto& v : p) v = rng.uniform();
    if (trial % 3 == 0 && m > 1) p[1] = p[0];  // exercise ties
    if (trial % 7 == 0) p[0] = 2.5;            // pseudo-p above 1 passes through
    const auto got = stats::bh_adjust(p);
    const auto want = oracles::bh_suffix_min(p);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < m; ++i) CHECK(got[i] == want[i]);
  }
}

TEST_CASE("bh_adjust basic shape properties") {
  CHECK(stats::bh_adjust({}).empty());
  CHECK(stats::bh_adjust({0.2}) == std::vector<double>{0.2});
  const std::vector<double> equal{0.3, 0.3, 0.3};
  for (double v : stats::bh_adjust(equal)) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));

  Rng rng(5);
  std::vector<double> p(6);
  for (auto& v : p) v = rng.uniform();
  const auto adj = stats::bh_adjust(p);
  for (size_t i = 0; i < p.size(); ++i) CHECK(adj[i] >= p[i]);  // m/j >= 1
}
