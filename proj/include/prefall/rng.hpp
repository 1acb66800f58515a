#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace prefall {

// splitmix64 step; used to derive independent per-item seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic RNG with explicit draw routines. std::mt19937_64 output is
// fully specified by the standard; the std::*_distribution adapters are not,
// so all shaping is done here to keep files and tests portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1) with 53 random bits
  double next_unit() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // [0, n); modulo bias is < n / 2^64, irrelevant at our scales
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(eng_() % static_cast<std::uint64_t>(n));
  }

  // Box-Muller, one value per call
  double next_gaussian() {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Fisher-Yates
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = next_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace prefall
