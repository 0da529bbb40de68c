#include "stabsel/types.hpp"

#include <algorithm>
#include <cmath>

namespace stabsel {

void ProblemShape::validate() const {
  if (n_inputs < 1) throw DataError("ProblemShape: n_inputs must be >= 1");
  if (n_outputs < 1) throw DataError("ProblemShape: n_outputs must be >= 1");
  if (n_samples < 2) throw DataError("ProblemShape: n_samples must be >= 2");
}

int Selection::flat_index(const ProblemShape& shape, const Pair& p) {
  if (p.input < 1 || p.input > shape.n_inputs || p.output < 1 || p.output > shape.n_outputs)
    throw DataError("Selection: pair (" + std::to_string(p.input) + "," + std::to_string(p.output) +
                    ") out of bounds for d=" + std::to_string(shape.n_inputs) +
                    ", t=" + std::to_string(shape.n_outputs));
  return (p.input - 1) + shape.n_inputs * (p.output - 1);
}

Pair Selection::pair_of(const ProblemShape& shape, int flat) {
  return Pair{flat % shape.n_inputs + 1, flat / shape.n_inputs + 1};
}

Selection Selection::from_pairs(const ProblemShape& shape, const std::vector<Pair>& pairs) {
  std::vector<int> flat;
  flat.reserve(pairs.size());
  for (const Pair& p : pairs) flat.push_back(flat_index(shape, p));
  return from_flat(shape, std::move(flat));
}

Selection Selection::from_flat(const ProblemShape& shape, std::vector<int> flat) {
  shape.validate();
  std::sort(flat.begin(), flat.end());
  if (std::adjacent_find(flat.begin(), flat.end()) != flat.end())
    throw DataError("Selection: duplicate members");
  if (!flat.empty() && (flat.front() < 0 || flat.back() >= shape.flat_size()))
    throw DataError("Selection: flat index out of bounds");
  Selection s(shape);
  s.flat_ = std::move(flat);
  return s;
}

bool Selection::contains(int flat) const {
  return std::binary_search(flat_.begin(), flat_.end(), flat);
}

std::vector<Pair> Selection::pairs() const {
  std::vector<Pair> out;
  out.reserve(flat_.size());
  for (int k : flat_) out.push_back(pair_of(shape_, k));
  return out;
}

Selection GroundTruth::negatives() const {
  const ProblemShape& shape = positives_.shape();
  std::vector<int> flat;
  flat.reserve(static_cast<std::size_t>(shape.flat_size()) - positives_.flat().size());
  for (int k = 0; k < shape.flat_size(); ++k)
    if (!positives_.contains(k)) flat.push_back(k);
  return Selection::from_flat(shape, std::move(flat));
}

namespace {

// Selections and truth tables are K-space objects; n_samples is bookkeeping
// and may differ (row subsets keep the parent truth).
bool same_k_space(const ProblemShape& a, const ProblemShape& b) {
  return a.n_inputs == b.n_inputs && a.n_outputs == b.n_outputs;
}

}  // namespace

ConfusionCounts confusion(const Selection& selection, const GroundTruth& truth) {
  if (!same_k_space(selection.shape(), truth.shape()))
    throw DataError("confusion: selection and truth shapes differ");
  ConfusionCounts c;
  for (int k : selection.flat()) {
    if (truth.positives().contains(k))
      ++c.true_positives;
    else
      ++c.false_positives;
  }
  return c;
}

namespace {

void validate_groups(const std::vector<std::vector<int>>& groups, const std::vector<double>& weights,
                     int bound, const char* which) {
  if (groups.size() != weights.size())
    throw DataError(std::string("GroupStructure: ") + which + " weight count differs from group count");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty())
      throw DataError(std::string("GroupStructure: empty ") + which + " group " + std::to_string(g + 1));
    for (int i : groups[g])
      if (i < 0 || i >= bound)
        throw DataError(std::string("GroupStructure: ") + which + " group " + std::to_string(g + 1) +
                        " index out of bounds");
    if (!(weights[g] > 0))
      throw DataError(std::string("GroupStructure: ") + which + " weight " + std::to_string(g + 1) +
                      " must be positive");
  }
}

}  // namespace

void GroupStructure::validate(const ProblemShape& shape) const {
  validate_groups(input_groups, input_weights, shape.n_inputs, "input");
  validate_groups(output_groups, output_weights, shape.n_outputs, "output");
}

bool GroupStructure::input_groups_partition(int n_inputs) const {
  std::vector<int> hits(static_cast<std::size_t>(n_inputs), 0);
  for (const auto& g : input_groups)
    for (int i : g) {
      if (i < 0 || i >= n_inputs) return false;
      ++hits[static_cast<std::size_t>(i)];
    }
  return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}

void DatasetBundle::validate() const {
  shape.validate();
  if (design.rows() != shape.n_samples || design.cols() != shape.n_inputs)
    throw DataError("DatasetBundle: design is " + std::to_string(design.rows()) + "x" +
                    std::to_string(design.cols()) + ", expected " + std::to_string(shape.n_samples) +
                    "x" + std::to_string(shape.n_inputs));
  if (response.rows() != shape.n_samples || response.cols() != shape.n_outputs)
    throw DataError("DatasetBundle: response is " + std::to_string(response.rows()) + "x" +
                    std::to_string(response.cols()) + ", expected " + std::to_string(shape.n_samples) +
                    "x" + std::to_string(shape.n_outputs));
  groups.validate(shape);
  if (truth && !same_k_space(truth->shape(), shape))
    throw DataError("DatasetBundle: truth shape mismatch");
  if (!design.allFinite() || !response.allFinite())
    throw DataError("DatasetBundle: non-finite entries");
}

DatasetBundle DatasetBundle::rows(const std::vector<int>& idx) const {
  DatasetBundle out;
  out.shape = shape;
  out.shape.n_samples = static_cast<Eigen::Index>(idx.size());
  out.design.resize(out.shape.n_samples, shape.n_inputs);
  out.response.resize(out.shape.n_samples, shape.n_outputs);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= design.rows()) throw DataError("DatasetBundle::rows: index out of range");
    out.design.row(static_cast<Eigen::Index>(r)) = design.row(idx[r]);
    out.response.row(static_cast<Eigen::Index>(r)) = response.row(idx[r]);
  }
  out.groups = groups;
  out.truth = truth;
  out.meta = meta;
  return out;
}

namespace detail {

// Population standard deviation (divisor N), so standardized columns satisfy
// (1/N)||x||^2 = 1.
void standardize_columns(Eigen::MatrixXd& m, const char* which) {
  const auto n = static_cast<double>(m.rows());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mean = m.col(j).mean();
    m.col(j).array() -= mean;
    const double sd = std::sqrt(m.col(j).squaredNorm() / n);
    if (!(sd > 1e-13 * std::max(1.0, std::abs(mean))))
      throw DataError(std::string(which) + " column " + std::to_string(j + 1) + " is constant");
    m.col(j) /= sd;
  }
}

}  // namespace detail

DatasetBundle standardize(DatasetBundle bundle) {
  bundle.validate();
  detail::standardize_columns(bundle.design, "design");
  detail::standardize_columns(bundle.response, "response");
  return bundle;
}

}  // namespace stabsel
