#include "stabsel/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stabsel {

namespace {

std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t state = base;
  std::uint64_t h = splitmix64_next(state);
  for (std::uint64_t t : tags) {
    state = h ^ (t + 0x9e3779b97f4a7c15ULL + (h << 12) + (h >> 3));
    h = splitmix64_next(state);
  }
  return h;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  double u;
  do {
    u = uniform();
  } while (u == 0.0);
  return u;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void Rng::fill_normal(Eigen::Ref<Eigen::MatrixXd> m) {
  double* data = m.data();
  const Eigen::Index n = m.size();
  Eigen::Index i = 0;
  while (i + 1 < n) {
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    data[i++] = r * std::cos(2.0 * std::numbers::pi * u2);
    data[i++] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  if (i < n) data[i] = normal();
}

std::vector<int> Rng::sample_without_replacement(int n, int m) {
  if (m < 0 || m > n) throw std::invalid_argument("sample_without_replacement: need 0 <= m <= n");
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < m; ++i) {
    const auto j = i + static_cast<int>(uniform_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

void Rng::shuffle(std::vector<int>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace stabsel
