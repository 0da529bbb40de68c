#include <cassert>
#include <cmath>
#include <vector>

#include "stabsel/solvers.hpp"
#include "solvers_detail.hpp"

namespace stabsel::solvers {

namespace {

// One smoothed group term: the coordinates of a column-block B_gj (input
// group g within output column j) or row-block B_ih, with weight c = λθ_g
// or λφ_h already folded in.
struct SmoothTerm {
  std::vector<Eigen::Index> flat;  // entries into the d x t matrix
  double c = 0.0;
};

double true_group_penalty(const Eigen::MatrixXd& b, const std::vector<SmoothTerm>& terms) {
  double total = 0.0;
  for (const auto& term : terms) {
    double norm2 = 0.0;
    for (Eigen::Index f : term.flat) norm2 += b(f) * b(f);
    total += term.c * std::sqrt(norm2);
  }
  return total;
}

// Nesterov-smoothed value Σ ψ_μ(c·v) with ψ_μ(u) = ||u|| - μ/2 when
// ||u|| ≥ μ, ||u||²/(2μ) otherwise.
double smoothed_group_penalty(const Eigen::MatrixXd& b, const std::vector<SmoothTerm>& terms,
                              double mu) {
  double total = 0.0;
  for (const auto& term : terms) {
    double norm2 = 0.0;
    for (Eigen::Index f : term.flat) norm2 += b(f) * b(f);
    double u = term.c * std::sqrt(norm2);
    total += u >= mu ? u - 0.5 * mu : 0.5 * u * u / mu;
  }
  return total;
}

void add_smoothed_gradient(const Eigen::MatrixXd& b, const std::vector<SmoothTerm>& terms,
                           double mu, Eigen::MatrixXd& grad) {
  for (const auto& term : terms) {
    double norm2 = 0.0;
    for (Eigen::Index f : term.flat) norm2 += b(f) * b(f);
    double u = term.c * std::sqrt(norm2);
    double scale = term.c * term.c / std::max(mu, u);
    if (scale == 0.0) continue;
    for (Eigen::Index f : term.flat) grad(f) += scale * b(f);
  }
}

// ||XᵀX/N||₂ by power iteration from the all-ones direction; deterministic.
double loss_lipschitz(const Eigen::MatrixXd& xtx) {
  if (xtx.rows() == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(xtx.rows()).normalized();
  double value = 0.0;
  for (int it = 0; it < 300; ++it) {
    Eigen::VectorXd w = xtx * v;
    double next = w.norm();
    if (next == 0.0) return 0.0;
    v = w / next;
    if (it > 10 && std::abs(next - value) <= 1e-12 * next) {
      value = next;
      break;
    }
    value = next;
  }
  return value * 1.02;  // safety margin; MFISTA tolerates overestimates
}

}  // namespace

FitReport fit_siol(const DatasetBundle& data, const PenaltyConfig& penalty,
                   const SolverOptions& opts) {
  data.validate();
  detail::require_finite(data.design, "design");
  detail::require_finite(data.response, "response");
  detail::require_positive_lambda(penalty.lambda);
  if (penalty.l1_weight < 0.0) throw DataError("fit_siol: l1_weight must be non-negative");

  const Eigen::MatrixXd& x = data.design;
  const Eigen::Index d = x.cols();
  const Eigen::Index t = data.response.cols();
  const double n = static_cast<double>(x.rows());
  const double lambda = penalty.lambda;
  const double w = penalty.l1_weight;

  // Without output groups the objective is a sum of independent per-output
  // problems; solve them separately. This keeps a joint fit bit-identical to
  // its per-column fits and the subproblems converge faster.
  if (t > 1 && data.groups.output_groups.empty()) {
    FitReport report;
    report.coefficients.shape = data.shape;
    report.coefficients.values.resize(d, t);
    report.objective_value = 0.0;
    report.converged = true;
    DatasetBundle single;
    single.shape = {data.shape.n_inputs, 1, data.shape.n_samples};
    single.design = data.design;
    single.groups.input_groups = data.groups.input_groups;
    single.groups.input_weights = data.groups.input_weights;
    for (Eigen::Index j = 0; j < t; ++j) {
      single.response = data.response.col(j);
      SolverOptions col_opts = opts;
      Eigen::MatrixXd warm_col;
      if (opts.warm_start) {
        if (opts.warm_start->rows() != d || opts.warm_start->cols() != t)
          throw DataError("fit_siol: warm start shape mismatch");
        warm_col = opts.warm_start->col(j);
        col_opts.warm_start = &warm_col;
      }
      const FitReport part = fit_siol(single, penalty, col_opts);
      report.coefficients.values.col(j) = part.coefficients.values.col(0);
      report.objective_value += part.objective_value;
      report.kkt_residual = std::max(report.kkt_residual, part.kkt_residual);
      report.iterations += part.iterations;
      report.converged = report.converged && part.converged;
    }
    return report;
  }

  const Eigen::MatrixXd xtx = (x.transpose() * x) / n;
  const Eigen::MatrixXd xty = (x.transpose() * data.response) / n;
  const double y2 = data.response.squaredNorm();

  std::vector<SmoothTerm> terms;
  terms.reserve(data.groups.input_groups.size() * static_cast<size_t>(t) +
                data.groups.output_groups.size() * static_cast<size_t>(d));
  for (size_t g = 0; g < data.groups.input_groups.size(); ++g)
    for (Eigen::Index j = 0; j < t; ++j) {
      SmoothTerm term;
      term.c = lambda * data.groups.input_weights[g];
      for (int i : data.groups.input_groups[g]) term.flat.push_back(i + d * j);
      terms.push_back(std::move(term));
    }
  for (size_t h = 0; h < data.groups.output_groups.size(); ++h)
    for (Eigen::Index i = 0; i < d; ++i) {
      SmoothTerm term;
      term.c = lambda * data.groups.output_weights[h];
      for (int j : data.groups.output_groups[h]) term.flat.push_back(i + d * j);
      terms.push_back(std::move(term));
    }

  // Largest per-entry sum of squared term weights: CᵀC is diagonal because
  // each term's coordinates enter it once, so the smoothed-gradient
  // Lipschitz constant is exactly this over μ.
  Eigen::MatrixXd cover = Eigen::MatrixXd::Zero(d, t);
  for (const auto& term : terms)
    for (Eigen::Index f : term.flat) cover(f) += term.c * term.c;
  const double cover_max = terms.empty() ? 0.0 : cover.maxCoeff();

  const double loss_l = loss_lipschitz(xtx);
  // Per-output objective scale: keeps the smoothing level of a joint fit
  // identical to that of its per-column fits, so an H = ∅ problem decomposes
  // exactly instead of drifting by the smoothing error.
  const double scale = std::max(0.5 * y2 / (n * static_cast<double>(t)), 1e-12);
  const double mu_first = opts.siol_mu_factor * scale;
  const double mu_last = std::min(mu_first, opts.siol_mu_min_factor * scale);

  Eigen::MatrixXd x_cur = Eigen::MatrixXd::Zero(d, t);
  if (opts.warm_start) {
    if (opts.warm_start->rows() != d || opts.warm_start->cols() != t)
      throw DataError("fit_siol: warm start shape mismatch");
    x_cur = *opts.warm_start;
  }

  auto loss_of = [&](const Eigen::MatrixXd& b) {
    double quad = (b.cwiseProduct(xtx * b)).sum();
    double cross = (b.cwiseProduct(xty)).sum();
    return std::max(0.0, 0.5 * (y2 / n + quad) - cross);
  };
  auto smoothed_objective = [&](const Eigen::MatrixXd& b, double mu) {
    return loss_of(b) + smoothed_group_penalty(b, terms, mu) + lambda * w * b.cwiseAbs().sum();
  };

  FitReport report;
  report.coefficients.shape = data.shape;

  int total_steps = 0;
  bool budget_left = true;
  double final_residual = 0.0;
  const int window = 10;

  for (double mu = mu_first;; mu *= 0.5) {
    const bool last_pass = terms.empty() || mu * 0.5 < mu_last * (1.0 - 1e-12);
    const double step = 1.0 / std::max(loss_l + (terms.empty() ? 0.0 : cover_max / mu), 1e-12);
    const double cut = step * lambda * w;

    // Prox-gradient residual at x, per unit step; the convergence measure.
    auto mapping_residual = [&](const Eigen::MatrixXd& x) {
      Eigen::MatrixXd grad = xtx * x - xty;
      add_smoothed_gradient(x, terms, mu, grad);
      Eigen::MatrixXd z = x - step * grad;
      if (cut > 0.0)
        z = z.unaryExpr([cut](double v) { return detail::soft_threshold(v, cut); });
      return (x - z).cwiseAbs().maxCoeff() / step;
    };

    Eigen::MatrixXd x_prev = x_cur;
    Eigen::MatrixXd y_pt = x_cur;
    double t_k = 1.0;
    double f_x = smoothed_objective(x_cur, mu);
    std::vector<double> history{f_x};
    bool done = false;
    double best_residual = std::numeric_limits<double>::infinity();
    int steps_since_check = 0;
    int pass_steps = 0;
    int steps_at_best = 0;
    const int check_every = 250;
    const int patience = 2000;

    while (!done && budget_left) {
      if (total_steps >= opts.max_prox_steps) {
        budget_left = false;
        break;
      }
      ++total_steps;
      ++pass_steps;

      Eigen::MatrixXd grad = xtx * y_pt - xty;
      add_smoothed_gradient(y_pt, terms, mu, grad);
      Eigen::MatrixXd z = y_pt - step * grad;
      if (cut > 0.0)
        z = z.unaryExpr([cut](double v) { return detail::soft_threshold(v, cut); });

      double f_z = smoothed_objective(z, mu);
      const bool accept = std::isfinite(f_z) && f_z <= f_x;
      Eigen::MatrixXd x_next = accept ? z : x_cur;
      double f_next = accept ? f_z : f_x;
#ifndef NDEBUG
      assert(f_next <= f_x + 1e-10 * std::max(1.0, std::abs(f_x)));
#endif
      double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k));
      y_pt = x_next + (t_k / t_next) * (z - x_next) + ((t_k - 1.0) / t_next) * (x_next - x_prev);

      x_prev = x_cur;
      x_cur = x_next;
      f_x = f_next;
      t_k = t_next;

      history.push_back(f_x);
      bool plateaued = false;
      if (history.size() > static_cast<size_t>(window)) {
        const double drop = history[history.size() - 1 - window] - f_x;
        plateaued = drop <= opts.siol_rel_tol * std::max(1.0, std::abs(f_x));
      }
      if (plateaued || ++steps_since_check >= check_every) {
        // Flat objective alone is not convergence: momentum rejections can
        // stall the monotone iterate far from the optimum. Confirm with the
        // mapping residual; restart momentum while it keeps improving, and
        // stop once several consecutive checks bring no real progress (the
        // residual is not monotone along FISTA, so one flat check means
        // nothing).
        steps_since_check = 0;
        const double residual = mapping_residual(x_cur);
        if (residual < 0.95 * best_residual) {
          best_residual = residual;
          steps_at_best = pass_steps;
        }
        if (residual <= opts.kkt_tol) {
          done = true;
        } else if (!last_pass && plateaued) {
          done = true;
        } else if (pass_steps - steps_at_best >= patience) {
          done = true;
        } else if (plateaued) {
          y_pt = x_cur;
          x_prev = x_cur;
          t_k = 1.0;
          history.assign(1, f_x);
        }
      }
    }

    if (!budget_left || last_pass) {
      final_residual = mapping_residual(x_cur);
      // Exact-prox fits (no group terms) are held to the solver KKT
      // tolerance. Smoothed fits cannot reliably reach it at the final μ;
      // they count as converged at the support-accuracy level, with the
      // true mapping residual reported alongside.
      const double tol = terms.empty() ? opts.kkt_tol
                                       : std::max(opts.kkt_tol, opts.siol_converged_tol);
      report.converged = budget_left && final_residual <= tol;
      break;
    }
  }
  report.kkt_residual = final_residual;

  report.iterations = total_steps;
  report.objective_value =
      loss_of(x_cur) + true_group_penalty(x_cur, terms) + lambda * w * x_cur.cwiseAbs().sum();
  report.coefficients.values = x_cur;
  return report;
}

}  // namespace stabsel::solvers
