#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace mdslb {

/// Splittable 64-bit generator (the SplitMix64 update).  Replication
/// streams are derived as seed XOR replication-index; the mixing function
/// decorrelates nearby seeds.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_double(SplitMix64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Exponential variate by inversion.  Hand-rolled so runs are reproducible
/// independent of the standard library's distribution internals.
inline double exponential(SplitMix64& g, double rate) {
  return -std::log1p(-uniform_double(g)) / rate;
}

/// Unbiased uniform integer in [0, bound) (Lemire's multiply-shift method).
inline std::uint64_t uniform_below(SplitMix64& g, std::uint64_t bound) {
  using u128 = unsigned __int128;
  std::uint64_t x = g();
  u128 m = static_cast<u128>(x) * static_cast<u128>(bound);
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (lo < threshold) {
      x = g();
      m = static_cast<u128>(x) * static_cast<u128>(bound);
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform random L-subset of {0..n-1} via Floyd's algorithm; out holds the
/// chosen indices in insertion order.
inline void sample_subset(SplitMix64& g, int n, int L, std::vector<int>& out) {
  out.clear();
  for (int j = n - L; j < n; ++j) {
    const int t = static_cast<int>(uniform_below(g, j + 1));
    if (std::find(out.begin(), out.end(), t) != out.end()) {
      out.push_back(j);
    } else {
      out.push_back(t);
    }
  }
}

}  // namespace mdslb
