#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace mdslb {

// Largest supported spread factor L.  Binomials and factorials are kept as
// exact integers up to this row, so alternating sums evaluate without
// cancellation noise from the coefficients themselves.
inline constexpr int kMaxSpread = 20;

namespace detail {

constexpr auto build_pascal() {
  std::array<std::array<std::uint64_t, kMaxSpread + 1>, kMaxSpread + 1> c{};
  for (int n = 0; n <= kMaxSpread; ++n) {
    c[n][0] = 1;
    for (int r = 1; r <= n; ++r) {
      c[n][r] = c[n - 1][r - 1] + (r < n ? c[n - 1][r] : 0);
    }
  }
  return c;
}

constexpr auto build_factorials() {
  std::array<std::uint64_t, kMaxSpread + 1> f{};
  f[0] = 1;
  for (int n = 1; n <= kMaxSpread; ++n) f[n] = f[n - 1] * n;
  return f;
}

inline constexpr auto kPascal = build_pascal();
inline constexpr auto kFactorial = build_factorials();

}  // namespace detail

/// C(n, r) with the convention C(n, r) = 0 for r < 0 or r > n.
inline double binomial(int n, int r) {
  if (n < 0 || n > kMaxSpread) {
    throw std::invalid_argument("binomial: n must lie in [0, 20]");
  }
  if (r < 0 || r > n) return 0.0;
  return static_cast<double>(detail::kPascal[n][r]);
}

inline double factorial(int n) {
  if (n < 0 || n > kMaxSpread) {
    throw std::invalid_argument("factorial: n must lie in [0, 20]");
  }
  return static_cast<double>(detail::kFactorial[n]);
}

/// x^e by repeated multiplication, with 0^0 = 1.
inline double int_pow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace mdslb
