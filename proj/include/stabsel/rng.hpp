#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace stabsel {

/// Derives an independent stream seed from a base seed and a tag path,
/// e.g. derive_seed(master, {kStreamSubsample, iter}). splitmix64 mixing;
/// stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

// Stream tags used throughout the library. Values are part of the
// reproducibility contract; do not renumber.
enum : std::uint64_t {
  kStreamDesign = 1,
  kStreamTruth = 2,
  kStreamNoise = 3,
  kStreamSubsample = 4,
  kStreamFolds = 5,
  kStreamSplit = 6,
  kStreamReplicate = 7,
};

/// Seeded random source. The engine is std::mt19937_64 (sequence pinned by
/// the standard); all distribution transforms are hand-rolled because the
/// std distributions are implementation-defined and would break bit-exact
/// reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform on (0, 1); rejects exact zeros.
  double uniform_open();

  /// Uniform integer in [0, n); unbiased rejection sampling. n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n);

  /// One standard normal draw (Box-Muller; the sine partner is discarded).
  double normal();

  /// Fills m with i.i.d. standard normals, column-major order, consuming
  /// Box-Muller pairs without waste.
  void fill_normal(Eigen::Ref<Eigen::MatrixXd> m);

  /// m distinct indices from [0, n), returned sorted ascending.
  std::vector<int> sample_without_replacement(int n, int m);

  void shuffle(std::vector<int>& v);

 private:
  std::mt19937_64 engine_;
};

}  // namespace stabsel
