#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "stabsel/stats.hpp"

namespace stabsel::stats {

namespace {

// Continued fraction for I_x(a, b), modified Lentz iteration.
double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("student_t_cdf: nu must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
  const double x = nu / (nu + t * t);
  const double half_tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

double two_sided_p(double t, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("two_sided_p: nu must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * nu, 0.5, nu / (nu + t * t));
}

OlsFit ols_tstats(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw DataError("ols_tstats: row count mismatch");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;

  OlsFit fit;
  if (n - (p + 1) < 1) return fit;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  if (svd.singularValues()(0) <= 0.0 ||
      svd.singularValues()(svd.singularValues().size() - 1) <
          1e-10 * svd.singularValues()(0))
    return fit;

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  Eigen::VectorXd coef = qr.solve(y);
  Eigen::VectorXd residual = y - design * coef;
  const double df = static_cast<double>(n - (p + 1));
  fit.sigma2 = residual.squaredNorm() / df;

  // Var(β̂) = σ²(XᵀX)⁻¹ = σ² R⁻¹R⁻ᵀ from the thin QR factor.
  Eigen::MatrixXd r_inv = qr.matrixQR()
                              .topRows(p + 1)
                              .triangularView<Eigen::Upper>()
                              .solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
  Eigen::MatrixXd xtx_inv = r_inv * r_inv.transpose();

  fit.coefficients = coef.tail(p);
  fit.t_stats.resize(p);
  fit.p_values.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = std::sqrt(fit.sigma2 * xtx_inv(j + 1, j + 1));
    fit.t_stats[j] = se > 0.0 ? fit.coefficients[j] / se
                              : std::numeric_limits<double>::infinity();
    fit.p_values[j] = two_sided_p(fit.t_stats[j], df);
  }
  fit.ok = true;
  return fit;
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
  const size_t m = p_values.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });

  std::vector<double> adjusted(m);
  double running = std::numeric_limits<double>::infinity();
  for (size_t rank = m; rank >= 1; --rank) {
    const size_t idx = order[rank - 1];
    running = std::min(running, p_values[idx] * static_cast<double>(m) / static_cast<double>(rank));
    adjusted[idx] = running;
  }
  return adjusted;
}

}  // namespace stabsel::stats
