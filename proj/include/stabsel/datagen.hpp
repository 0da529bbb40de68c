#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stabsel/solvers.hpp"
#include "stabsel/types.hpp"

namespace stabsel::datagen {

enum class MatrixType { kA, kB, kC, kD, kE, kExternal };

std::string to_string(MatrixType type);
MatrixType matrix_type_from_string(const std::string& name);  // "A".."E", "external"

struct DataConfig {
  MatrixType matrix_type = MatrixType::kA;
  int n_inputs = 0;          // d
  Eigen::Index n_samples = 0;
  /// Lasso and group lasso: s, the number of true variables (group lasso
  /// requires s divisible by 4, the truth being s/4 whole groups). SIOL:
  /// s_g, the number of true input groups.
  int n_true = 0;
  double snr = 1.0;
  solvers::AlgorithmId algorithm_target = solvers::AlgorithmId::kLasso;
  std::uint64_t seed = 0;
  std::string external_path;  // kExternal only: X.csv with a sidecar <path>.shape.json
  std::string name;

  void validate() const;
};

/// Unstandardized N×d draw per the type recipe (A: i.i.d. normal; B: 10
/// equal covariance blocks at 0.5; C: AR(1) recurrence giving the Toeplitz
/// 0.99^|i−j| covariance; D/E: 2- / 10-factor models; external: CSV load).
Eigen::MatrixXd gen_design(const DataConfig& cfg);

/// Group lasso: consecutive quadruples, θ_g = 1. SIOL: overlapping ranges
/// max(5(i−1),1)..min(5i+1,d) for i = 1..⌈d/5⌉ with θ_g = √|g|, plus one
/// output group over all 5 outputs with φ = √5. Lasso: empty structure.
GroupStructure gen_groups(const DataConfig& cfg);

/// σ² = ‖Xβ*‖² / (t · N · snr).
double noise_variance(double signal_sqnorm, int n_outputs, Eigen::Index n_samples, double snr);

/// Truth draw, β* on S* uniform in (0,1), noise at σ² = ‖Xβ*‖²/(t·N·snr),
/// then response standardization. `design` must already be standardized.
DatasetBundle gen_truth_and_response(Eigen::MatrixXd design, const GroupStructure& groups,
                                     const DataConfig& cfg);

/// gen_design → standardize → gen_groups → gen_truth_and_response.
DatasetBundle make_dataset(const DataConfig& cfg);

/// "lasso-A-N200-d200-s4-snr0.5"; SIOL uses "sg" for its group count. The
/// external letter rows keep only "external" as the type tag.
std::string default_name(const DataConfig& cfg);

/// Shrinks (or grows) N, d, and the truth size by `scale`, rounding while
/// preserving the divisibility each algorithm and matrix type require, and
/// renames to the default scheme. External configs and scale = 1 pass
/// through untouched.
DataConfig apply_scale(DataConfig cfg, double scale);

/// The benchmark configuration list for one algorithm, scaled: N, d, and
/// the truth size are multiplied by `scale` (rounded, divisibility
/// preserved). Fixed-design rows (the genomic F/G entries) are emitted as
/// external placeholders with their intrinsic sizes and need a file path
/// before use.
std::vector<DataConfig> config_table(solvers::AlgorithmId algorithm_target, double scale = 1.0);

}  // namespace stabsel::datagen
