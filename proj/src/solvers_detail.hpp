#pragma once

#include <algorithm>
#include <cmath>

#include "stabsel/types.hpp"

namespace stabsel::solvers::detail {

inline double soft_threshold(double z, double cut) {
  if (z > cut) return z - cut;
  if (z < -cut) return z + cut;
  return 0.0;
}

inline void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw DataError(std::string(what) + " contains non-finite values");
}

inline void require_positive_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw DataError("lambda must be finite and non-negative");
}

}  // namespace stabsel::solvers::detail
