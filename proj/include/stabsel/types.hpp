#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace stabsel {

/// Raised for malformed or inconsistent data (bad dimensions, constant
/// columns, unreadable files). The CLI maps this to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Problem dimensions: d inputs, t outputs, N samples. The selection set K
/// is the full set of d*t input-output pairs.
struct ProblemShape {
  int n_inputs = 0;
  int n_outputs = 0;
  Eigen::Index n_samples = 0;

  int flat_size() const { return n_inputs * n_outputs; }
  void validate() const;
  bool operator==(const ProblemShape&) const = default;
};

/// One input-output association, 1-based as in all external formats.
struct Pair {
  int input = 0;
  int output = 0;
  auto operator<=>(const Pair&) const = default;
};

/// An immutable subset of K, stored as sorted 0-based flat indices
/// (flat = (input-1) + d*(output-1)).
class Selection {
 public:
  Selection() = default;
  explicit Selection(ProblemShape shape) : shape_(shape) { shape_.validate(); }

  static int flat_index(const ProblemShape& shape, const Pair& p);
  static Pair pair_of(const ProblemShape& shape, int flat);

  /// Validates bounds and rejects duplicates.
  static Selection from_pairs(const ProblemShape& shape, const std::vector<Pair>& pairs);
  /// Takes 0-based flat indices; sorts, validates bounds, rejects duplicates.
  static Selection from_flat(const ProblemShape& shape, std::vector<int> flat);

  const ProblemShape& shape() const { return shape_; }
  int size() const { return static_cast<int>(flat_.size()); }
  bool empty() const { return flat_.empty(); }
  bool contains(int flat) const;
  const std::vector<int>& flat() const { return flat_; }
  std::vector<Pair> pairs() const;

  bool operator==(const Selection&) const = default;

 private:
  ProblemShape shape_;
  std::vector<int> flat_;
};

/// Ground truth S*; the negatives N* = K \ S* are derived on demand.
class GroundTruth {
 public:
  GroundTruth() = default;
  explicit GroundTruth(Selection positives) : positives_(std::move(positives)) {}

  const Selection& positives() const { return positives_; }
  Selection negatives() const;
  const ProblemShape& shape() const { return positives_.shape(); }

 private:
  Selection positives_;
};

struct ConfusionCounts {
  int true_positives = 0;   // T = |S* ∩ S|
  int false_positives = 0;  // V = |N* ∩ S|
  bool operator==(const ConfusionCounts&) const = default;
};

/// T and V for a selection against the truth. Throws when the K-spaces
/// (d, t) differ; n_samples may differ.
ConfusionCounts confusion(const Selection& selection, const GroundTruth& truth);

/// Input groups G with weights θ_g and output groups H with weights φ_h.
/// Groups may overlap and need not cover; an empty structure means
/// "no structural penalty" (plain lasso). Member indices are 0-based.
struct GroupStructure {
  std::vector<std::vector<int>> input_groups;
  std::vector<double> input_weights;
  std::vector<std::vector<int>> output_groups;
  std::vector<double> output_weights;

  bool empty() const { return input_groups.empty() && output_groups.empty(); }
  void validate(const ProblemShape& shape) const;
  /// True when the input groups are pairwise disjoint and cover [0, d).
  bool input_groups_partition(int n_inputs) const;
};

/// Free-form provenance carried with each dataset.
struct Provenance {
  std::string config_name;
  std::string matrix_type;
  std::uint64_t seed = 0;
  double snr = 0.0;
  nlohmann::json extra;
};

/// A dataset: N×d design, N×t response, group structure, optional truth.
struct DatasetBundle {
  ProblemShape shape;
  Eigen::MatrixXd design;
  Eigen::MatrixXd response;
  GroupStructure groups;
  std::optional<GroundTruth> truth;
  Provenance meta;

  void validate() const;
  /// Row subset (same groups, truth, meta). Indices are 0-based rows.
  DatasetBundle rows(const std::vector<int>& idx) const;
};

namespace detail {
/// In-place column standardization (divisor N). `which` names the matrix in
/// the constant-column error message.
void standardize_columns(Eigen::MatrixXd& m, const char* which);
}  // namespace detail

/// Centers and scales every design and response column to mean 0 and
/// standard deviation 1 (divisor N). Idempotent. Throws DataError naming
/// the first constant column found.
DatasetBundle standardize(DatasetBundle bundle);

}  // namespace stabsel
