#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "stabsel/control.hpp"
#include "stabsel/harness.hpp"
#include "stabsel/meta.hpp"

namespace stabsel::harness {

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ConfusionCounts require_confusion(const CellResult& cell, const char* op) {
  if (!cell.confusion)
    throw DataError(std::string(op) + ": cell " + cell.config_name + " r" +
                    std::to_string(cell.replicate) + " has no ground truth");
  return *cell.confusion;
}

// Best NTP at or below each integer V level, per replicate, then averaged.
std::vector<double> mean_curve(const std::vector<CellResult>& cells, int max_v, const char* op) {
  std::map<int, std::vector<ConfusionCounts>> by_replicate;
  for (const CellResult& cell : cells)
    by_replicate[cell.replicate].push_back(require_confusion(cell, op));
  std::vector<double> mean(static_cast<std::size_t>(max_v) + 1, 0.0);
  if (by_replicate.empty()) return mean;
  for (const auto& [replicate, points] : by_replicate) {
    (void)replicate;
    for (int v = 0; v <= max_v; ++v) {
      int best = 0;
      for (const ConfusionCounts& c : points)
        if (c.false_positives <= v) best = std::max(best, c.true_positives);
      mean[static_cast<std::size_t>(v)] += best;
    }
  }
  for (double& m : mean) m /= static_cast<double>(by_replicate.size());
  return mean;
}

}  // namespace

RocCurve roc_curve(const std::vector<CellResult>& regime_cells,
                   const std::vector<CellResult>& baseline_cells, int max_v) {
  if (max_v < 0) throw std::invalid_argument("roc_curve: max_v must be >= 0");
  if (regime_cells.empty()) throw DataError("roc_curve: no cells");
  RocCurve curve;
  curve.missing_baseline = baseline_cells.empty();
  const auto regime_mean = mean_curve(regime_cells, max_v, "roc_curve");
  const auto base_mean = curve.missing_baseline ? std::vector<double>()
                                                : mean_curve(baseline_cells, max_v, "roc_curve");
  for (int v = 0; v <= max_v; ++v) {
    RocPoint point;
    point.v_level = v;
    point.mean_ntp = regime_mean[static_cast<std::size_t>(v)];
    if (curve.missing_baseline) {
      point.relative = std::nan("");
    } else {
      const double r = point.mean_ntp;
      const double b = base_mean[static_cast<std::size_t>(v)];
      if (r == 0.0 && b == 0.0) {
        point.relative = 1.0;  // 0/0: both regimes found nothing at this level
        point.degenerate = true;
      } else {
        point.relative = r / (0.5 * (r + b));
      }
    }
    curve.points.push_back(point);
  }
  return curve;
}

namespace {

GroundTruth truth_of(const CellResult& cell) {
  return GroundTruth(Selection::from_pairs(cell.shape, cell.truth));
}

meta::StabilityProfile profile_of(const CellResult& cell) {
  if (cell.tau_counts.empty())
    throw DataError("cell " + cell.config_name + " r" + std::to_string(cell.replicate) +
                    " carries no stability counts");
  meta::StabilityProfile profile;
  profile.shape = cell.shape;
  profile.counts = cell.tau_counts;
  profile.iterations = cell.iterations;
  return profile;
}

// One representative cell per (config, replicate): stability counts and
// screen-and-clean p-values are shared across their grid, so the smallest
// grid index suffices for re-thresholding.
std::vector<const CellResult*> representatives(const std::vector<CellResult>& cells,
                                               const std::string& regime) {
  std::map<std::pair<std::string, int>, const CellResult*> chosen;
  for (const CellResult& cell : cells) {
    if (cell.regime != regime) continue;
    auto& slot = chosen[{cell.config_name, cell.replicate}];
    if (slot == nullptr || cell.grid_index < slot->grid_index) slot = &cell;
  }
  std::vector<const CellResult*> out;
  out.reserve(chosen.size());
  for (const auto& [key, cell] : chosen) {
    (void)key;
    out.push_back(cell);
  }
  return out;
}

}  // namespace

std::vector<ErrorControlRow> error_control_table(const std::vector<CellResult>& cells,
                                                 const std::vector<double>& targets) {
  if (targets.empty()) throw std::invalid_argument("error_control_table: no targets");
  for (double t : targets)
    if (!(t > 0)) throw std::invalid_argument("error_control_table: targets must be positive");

  struct Acc {
    double sum_v = 0;
    int within = 0;
    int n = 0;
    bool clamped = false;
  };
  // (regime, algorithm, matrix_type, target index) -> accumulator
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, Acc> groups;

  for (const std::string& regime : {std::string(kRegimeStability), std::string(kRegimeSac)}) {
    for (const CellResult* cell : representatives(cells, regime)) {
      const GroundTruth truth = truth_of(*cell);
      for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const double target = targets[ti];
        Selection selection;
        bool clamped = false;
        if (regime == kRegimeStability) {
          const auto profile = profile_of(*cell);
          const double q = cell->q_hat;
          double pi = 1.0;
          if (q > 0) {
            pi = control::pi_for_bound(q, cell->shape.flat_size(), target);
            if (pi > 1.0) {
              pi = 1.0;
              clamped = true;
            }
          } else {
            clamped = true;  // q_hat = 0: no crossing exists, fall back to pi = 1
          }
          selection = meta::threshold_profile(profile, pi);
        } else {
          if (cell->p_values.size() == 0)
            throw DataError("cell " + cell->config_name + " r" + std::to_string(cell->replicate) +
                            " carries no p-values");
          selection = control::sac_threshold(cell->shape, cell->p_values, target);
        }
        const int v = confusion(selection, truth).false_positives;
        Acc& acc = groups[{regime, cell->algorithm, cell->matrix_type, ti}];
        acc.sum_v += v;
        acc.within += v <= target ? 1 : 0;
        acc.n += 1;
        acc.clamped = acc.clamped || clamped;
      }
    }
  }

  std::vector<ErrorControlRow> rows;
  for (const auto& [key, acc] : groups) {
    ErrorControlRow row;
    row.regime = std::get<0>(key);
    row.algorithm = std::get<1>(key);
    row.matrix_type = std::get<2>(key);
    row.target = targets[std::get<3>(key)];
    row.mean_v = acc.sum_v / acc.n;
    row.p_within = static_cast<double>(acc.within) / acc.n;
    row.clamped = acc.clamped;
    row.n = acc.n;
    rows.push_back(std::move(row));
  }
  return rows;
}

double gamma_power(const std::vector<CellResult>& regime_cells, const PowerMetricConfig& cfg) {
  if (!(cfg.gamma > 0) || !(cfg.gamma <= 1))
    throw std::invalid_argument("gamma_power: gamma must lie in (0, 1]");
  if (regime_cells.empty()) throw DataError("gamma_power: no cells");
  std::map<int, bool> hit;
  std::map<int, int> truth_sizes;
  for (const CellResult& cell : regime_cells) {
    const ConfusionCounts c = require_confusion(cell, "gamma_power");
    truth_sizes[cell.replicate] = cell.truth_size;
    // Tiny slack so e.g. 0.4 * 10 does not round up to 5.
    const int need =
        static_cast<int>(std::ceil(cfg.gamma * static_cast<double>(cell.truth_size) - 1e-9));
    bool& h = hit[cell.replicate];
    h = h || (c.false_positives == 0 && c.true_positives >= need);
  }
  int successes = 0;
  for (const auto& [replicate, h] : hit) {
    (void)replicate;
    successes += h ? 1 : 0;
  }
  return static_cast<double>(successes) / static_cast<double>(hit.size());
}

namespace {

struct Scored {
  double score = 0;
  int size = 0;
  double lambda = 0;  // NaN sorts lowest
  double pi = 0;
  ConfusionCounts outcome;
};

// Mirrors the model-choice tie-breaking: score, then smaller selection,
// then larger lambda, then larger pi.
bool better(const Scored& a, const Scored& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.size != b.size) return a.size < b.size;
  const double la = std::isnan(a.lambda) ? 0.0 : a.lambda;
  const double lb = std::isnan(b.lambda) ? 0.0 : b.lambda;
  if (la != lb) return la > lb;
  return a.pi > b.pi;
}

Scored scored_from_cell(const CellResult& cell, double score) {
  Scored s;
  s.score = score;
  s.size = cell.selection.size();
  s.lambda = cell.lambda;
  s.pi = std::isnan(cell.grid_value) ? 0.0 : cell.grid_value;
  s.outcome = require_confusion(cell, "model_choice_table");
  return s;
}

}  // namespace

std::vector<ModelChoiceRow> model_choice_table(const std::vector<CellResult>& cells) {
  // (config, replicate) -> oracle T - V over the baseline grid
  std::map<std::pair<std::string, int>, Scored> baseline_oracle;
  for (const CellResult& cell : cells) {
    if (cell.regime != kRegimeBaseline) continue;
    const Scored s = scored_from_cell(
        cell, static_cast<double>(require_confusion(cell, "model_choice_table").true_positives -
                                  require_confusion(cell, "model_choice_table").false_positives));
    const auto key = std::make_pair(cell.config_name, cell.replicate);
    auto it = baseline_oracle.find(key);
    if (it == baseline_oracle.end())
      baseline_oracle.emplace(key, s);
    else if (better(s, it->second))
      it->second = s;
  }

  // (config, regime, replicate) -> cells of one grid
  std::map<std::tuple<std::string, std::string, int>, std::vector<const CellResult*>> grids;
  std::map<std::tuple<std::string, std::string, int>, std::string> group_algorithm;
  for (const CellResult& cell : cells) {
    if (cell.regime == kRegimeBaseline) continue;
    const auto key = std::make_tuple(cell.config_name, cell.regime, cell.replicate);
    grids[key].push_back(&cell);
    group_algorithm[key] = cell.algorithm;
  }

  struct Acc {
    double t_proxy = 0, v_proxy = 0, t_oracle = 0, v_oracle = 0;
    int n = 0, n_oracle = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> rows;  // (regime, algorithm)

  for (const auto& [key, grid] : grids) {
    const std::string& config_name = std::get<0>(key);
    const std::string& regime = std::get<1>(key);
    const int replicate = std::get<2>(key);
    const std::string& algorithm = group_algorithm[key];
    Acc& acc = rows[{regime, algorithm}];

    if (regime == kRegimeCv) {
      const CellResult& cell = *grid.front();
      const ConfusionCounts proxy = require_confusion(cell, "model_choice_table");
      acc.t_proxy += proxy.true_positives;
      acc.v_proxy += proxy.false_positives;
      acc.n += 1;
      const auto oracle = baseline_oracle.find({config_name, replicate});
      if (oracle != baseline_oracle.end()) {
        acc.t_oracle += oracle->second.outcome.true_positives;
        acc.v_oracle += oracle->second.outcome.false_positives;
        acc.n_oracle += 1;
      }
      continue;
    }

    bool first = true;
    Scored best_proxy, best_oracle;
    for (const CellResult* cell : grid) {
      double proxy_score = 0;
      if (regime == kRegimeStability) {
        const double b_hat =
            control::nfp_bound(cell->q_hat, cell->shape.flat_size(), cell->grid_value);
        proxy_score = cell->selection.size() - 2.0 * b_hat;
      } else {  // screen-and-clean: the threshold itself bounds the NFP
        proxy_score = cell->selection.size() - 2.0 * cell->grid_value;
      }
      const Scored proxy = scored_from_cell(*cell, proxy_score);
      const ConfusionCounts c = proxy.outcome;
      const Scored oracle =
          scored_from_cell(*cell, static_cast<double>(c.true_positives - c.false_positives));
      if (first || better(proxy, best_proxy)) best_proxy = proxy;
      if (first || better(oracle, best_oracle)) best_oracle = oracle;
      first = false;
    }
    acc.t_proxy += best_proxy.outcome.true_positives;
    acc.v_proxy += best_proxy.outcome.false_positives;
    acc.t_oracle += best_oracle.outcome.true_positives;
    acc.v_oracle += best_oracle.outcome.false_positives;
    acc.n += 1;
    acc.n_oracle += 1;
  }

  std::vector<ModelChoiceRow> out;
  for (const auto& [key, acc] : rows) {
    ModelChoiceRow row;
    row.regime = key.first;
    row.algorithm = key.second;
    row.mean_t_proxy = acc.t_proxy / acc.n;
    row.mean_v_proxy = acc.v_proxy / acc.n;
    row.mean_t_oracle = acc.n_oracle ? acc.t_oracle / acc.n_oracle : std::nan("");
    row.mean_v_oracle = acc.n_oracle ? acc.v_oracle / acc.n_oracle : std::nan("");
    row.n = acc.n;
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

// (config, regime) -> cells, deterministically ordered.
std::map<std::pair<std::string, std::string>, std::vector<CellResult>> by_config_regime(
    const std::vector<CellResult>& cells) {
  std::map<std::pair<std::string, std::string>, std::vector<CellResult>> groups;
  for (const CellResult& cell : cells) groups[{cell.config_name, cell.regime}].push_back(cell);
  return groups;
}

}  // namespace

std::string csv_roc(const std::vector<CellResult>& cells, int max_v) {
  auto groups = by_config_regime(cells);
  std::string out = "config,regime,v_level,mean_ntp,relative,degenerate,missing_baseline\n";
  for (const auto& [key, regime_cells] : groups) {
    const auto base = groups.find({key.first, kRegimeBaseline});
    const RocCurve curve =
        roc_curve(regime_cells, base == groups.end() ? std::vector<CellResult>() : base->second,
                  max_v);
    for (const RocPoint& p : curve.points) {
      out += key.first + "," + key.second + "," + std::to_string(p.v_level) + "," +
             fmt6(p.mean_ntp) + "," + fmt6(p.relative) + "," + (p.degenerate ? "1" : "0") + "," +
             (curve.missing_baseline ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string csv_error_control(const std::vector<CellResult>& cells,
                              const std::vector<double>& targets) {
  std::string out = "regime,algorithm,matrix_type,target,mean_v,p_within,clamped,n\n";
  for (const ErrorControlRow& row : error_control_table(cells, targets)) {
    out += row.regime + "," + row.algorithm + "," + row.matrix_type + "," + fmt6(row.target) + "," +
           fmt6(row.mean_v) + "," + fmt6(row.p_within) + "," + (row.clamped ? "1" : "0") + "," +
           std::to_string(row.n) + "\n";
  }
  return out;
}

std::string csv_model_choice(const std::vector<CellResult>& cells) {
  std::string out = "regime,algorithm,mean_t_proxy,mean_v_proxy,mean_t_oracle,mean_v_oracle,n\n";
  for (const ModelChoiceRow& row : model_choice_table(cells)) {
    out += row.regime + "," + row.algorithm + "," + fmt6(row.mean_t_proxy) + "," +
           fmt6(row.mean_v_proxy) + "," + fmt6(row.mean_t_oracle) + "," + fmt6(row.mean_v_oracle) +
           "," + std::to_string(row.n) + "\n";
  }
  return out;
}

std::string csv_gamma_power(const std::vector<CellResult>& cells,
                            const std::vector<double>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("csv_gamma_power: no gamma values");
  std::string out = "config,regime,gamma,power\n";
  for (const auto& [key, regime_cells] : by_config_regime(cells)) {
    for (double gamma : gammas) {
      PowerMetricConfig cfg;
      cfg.gamma = gamma;
      out += key.first + "," + key.second + "," + fmt6(gamma) + "," +
             fmt6(gamma_power(regime_cells, cfg)) + "\n";
    }
  }
  return out;
}

}  // namespace stabsel::harness
