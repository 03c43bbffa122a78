#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdslb/combinatorics.hpp"
#include "mdslb/occupancy.hpp"
#include "mdslb/params.hpp"

namespace mdslb {

namespace detail {

inline void check_spread(int L, int k) {
  if (!(1 <= k && k < L && L <= kMaxSpread)) {
    throw std::invalid_argument("require 1 <= k < L <= 20, got L=" +
                                std::to_string(L) + ", k=" +
                                std::to_string(k));
  }
}

inline void check_unit_interval(double x, const char* who) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument(std::string(who) + ": x = " +
                                std::to_string(x) + " outside [0,1]");
  }
}

}  // namespace detail

/// Routing polynomial f(x) = sum_{i=1}^{k} C(L, L-k+i) C(L-k+i-2, i-1)
/// (-1)^{i-1} x^{L-k+i}.  Evaluated in the order written with exact
/// coefficients.  f(0) = 0, f(1) = k, and f is increasing and convex on
/// [0,1].
inline double eval_f(double x, int L, int k) {
  detail::check_spread(L, k);
  detail::check_unit_interval(x, "eval_f");
  double sum = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double sign = (i % 2 == 1) ? 1.0 : -1.0;
    sum += sign * binomial(L, L - k + i) * binomial(L - k + i - 2, i - 1) *
           int_pow(x, L - k + i);
  }
  return sum;
}

/// Term-by-term derivative of eval_f; bounded by [0, L] on [0,1].
inline double eval_f_prime(double x, int L, int k) {
  detail::check_spread(L, k);
  detail::check_unit_interval(x, "eval_f_prime");
  double sum = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double sign = (i % 2 == 1) ? 1.0 : -1.0;
    const int e = L - k + i;
    sum += sign * binomial(L, L - k + i) * binomial(L - k + i - 2, i - 1) * e *
           int_pow(x, e - 1);
  }
  return sum;
}

/// w(x) = x f'(x) - (L-k+1) f(x), nonpositive on [0,1].  Its sign carries
/// the concavity argument behind the lower decay bound.
inline double eval_w(double x, int L, int k) {
  return x * eval_f_prime(x, L, k) - (L - k + 1) * eval_f(x, L, k);
}

namespace detail {

// zeta_bar given the mass below / at / above the level, i.e. with
// below = sum_{m<j} r_m, at = r_j, above = sum_{m>j} r_m.
inline double zeta_from_sums(double below, double at, double above, int L,
                             int k) {
  double total = 0.0;
  for (int i1 = 0; i1 <= k - 1; ++i1) {
    const double b = int_pow(below, i1) / detail::kFactorial[i1];
    for (int i2 = 1; i2 <= L - i1; ++i2) {
      const double weight = std::min(i2, k - i1);
      total += weight * b * (int_pow(at, i2) / detail::kFactorial[i2]) *
               (int_pow(above, L - i1 - i2) / detail::kFactorial[L - i1 - i2]);
    }
  }
  return total;
}

}  // namespace detail

/// Arrival intensity kernel: the probability-weighted count of sampled
/// queues of length exactly j that receive a piece, divided by L!.  Tail
/// mass beyond the truncation is treated as 0.
inline double zeta_bar(int j, const OccupancyPmf& r, int L, int k) {
  detail::check_spread(L, k);
  r.validate();
  if (j < 0) throw std::invalid_argument("zeta_bar: j must be >= 0");
  double below = 0.0;
  double above = 0.0;
  for (std::size_t m = 0; m < r.size(); ++m) {
    if (static_cast<int>(m) < j) below += r.p[m];
    if (static_cast<int>(m) > j) above += r.p[m];
  }
  const double at = j < static_cast<int>(r.size()) ? r.p[j] : 0.0;
  return detail::zeta_from_sums(below, at, above, L, k);
}

/// Max absolute residuals of the three combinatorial identities tying
/// zeta_bar to the routing polynomial.
struct IdentityResiduals {
  double order_stat = 0.0;   // L! zeta_bar(m) vs the order-statistic double sum
  double tail_split = 0.0;   // level-tail sum vs the binomial upper tail
  double zeta_to_f = 0.0;    // L! zeta_bar(j) vs f(u_j) - f(u_{j+1})
};

inline IdentityResiduals identity_residuals(const OccupancyPmf& r, int L,
                                            int k) {
  detail::check_spread(L, k);
  r.validate();
  const OccupancyTail u = iota(r);
  const double lfac = factorial(L);

  int support_end = 0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (r.p[j] > 0.0) support_end = static_cast<int>(j);
  }

  // inner(j, l) = sum_{i1=0}^{l-1} C(L,i1) (1-u_j)^{i1}
  //               sum_{i2=l-i1}^{L-i1} C(L-i1,i2) r_j^{i2} u_{j+1}^{L-i1-i2}
  auto inner = [&](int j, int l) {
    const double rj = j < static_cast<int>(r.size()) ? r.p[j] : 0.0;
    const double uj = u.at(j);
    const double ujn = u.at(j + 1);
    double s = 0.0;
    for (int i1 = 0; i1 <= l - 1; ++i1) {
      double s2 = 0.0;
      for (int i2 = l - i1; i2 <= L - i1; ++i2) {
        s2 += binomial(L - i1, i2) * int_pow(rj, i2) *
              int_pow(ujn, L - i1 - i2);
      }
      s += binomial(L, i1) * int_pow(1.0 - uj, i1) * s2;
    }
    return s;
  };

  // Binomial upper tail: sum_{j=L-l+1}^{L} C(L,j) u_m^j (1-u_m)^{L-j}.
  auto binom_tail = [&](int m, int l) {
    const double um = u.at(m);
    double s = 0.0;
    for (int j = L - l + 1; j <= L; ++j) {
      s += binomial(L, j) * int_pow(um, j) * int_pow(1.0 - um, L - j);
    }
    return s;
  };

  IdentityResiduals res;
  for (int m = 0; m <= support_end; ++m) {
    double rhs = 0.0;
    for (int l = 1; l <= k; ++l) rhs += inner(m, l);
    res.order_stat =
        std::max(res.order_stat, std::abs(lfac * zeta_bar(m, r, L, k) - rhs));
  }
  for (int l = 1; l <= k; ++l) {
    // The infinite level sum truncates exactly at the support end: every
    // term past it carries a positive power of r_j = 0.
    double lhs = 0.0;
    for (int m = support_end; m >= 0; --m) {
      lhs += inner(m, l);
      res.tail_split =
          std::max(res.tail_split, std::abs(lhs - binom_tail(m, l)));
    }
  }
  const int last = static_cast<int>(r.size()) - 1;
  for (int j = 0; j <= last; ++j) {
    // partial sums can round a hair past 1; pin them back into the domain
    const double uj = std::clamp(u.at(j), 0.0, 1.0);
    const double ujn = std::clamp(u.at(j + 1), 0.0, 1.0);
    const double diff = eval_f(uj, L, k) - eval_f(ujn, L, k);
    res.zeta_to_f = std::max(
        res.zeta_to_f, std::abs(lfac * zeta_bar(j, r, L, k) - diff));
  }
  return res;
}

/// Drift of the queue-length pmf: F(r) = lambda L! sum_j [zeta_bar(j-1) -
/// zeta_bar(j)] e_j + k sum_j [r_{j+1} - r_j] e_j + k r_0 e_0, with
/// zeta_bar(-1) = 0.  The k r_0 term cancels the spurious departure flow
/// out of empty queues, which is what makes the components sum to zero.
/// Returned vector has one extra slot so the arrival flow out of the last
/// occupied level is not lost.
inline std::vector<double> drift_F(const OccupancyPmf& r,
                                   const SystemParams& params) {
  params.validate();
  r.validate();
  const int L = params.L;
  const int k = params.k;
  const double lfac = factorial(L);
  const int M = static_cast<int>(r.size()) - 1;

  // zeta[j] for j in 0..M+1; the level past the truncation has r = 0 and no
  // mass above it, so its zeta vanishes.
  std::vector<double> zeta(M + 2, 0.0);
  double below = 0.0;
  double above = 0.0;
  for (int m = 1; m <= M; ++m) above += r.p[m];
  for (int j = 0; j <= M; ++j) {
    zeta[j] = detail::zeta_from_sums(below, r.p[j], above, L, k);
    below += r.p[j];
    if (j + 1 <= M) above = std::max(above - r.p[j + 1], 0.0);
  }

  std::vector<double> F(M + 2, 0.0);
  for (int j = 0; j <= M + 1; ++j) {
    const double zprev = j == 0 ? 0.0 : zeta[j - 1];
    const double rj = j <= M ? r.p[j] : 0.0;
    const double rnext = j + 1 <= M ? r.p[j + 1] : 0.0;
    F[j] = params.lambda * lfac * (zprev - zeta[j]) + k * (rnext - rj);
  }
  F[0] += k * r.p[0];
  return F;
}

/// Mean-field fixed point: u_0 = 1, u_{m+1} = lambda f(u_m) / k, truncated
/// at M and padded with zeros once the entries drop below underflow_eps.
inline OccupancyTail fixed_point(const SystemParams& params, int M = 64,
                                 double underflow_eps = 1e-300) {
  params.validate();
  if (M < 1) throw std::invalid_argument("fixed_point: M must be >= 1");
  if (underflow_eps < 0.0) {
    throw std::invalid_argument("fixed_point: underflow_eps must be >= 0");
  }
  std::vector<double> u(static_cast<std::size_t>(M) + 1, 0.0);
  u[0] = 1.0;
  for (int m = 0; m < M; ++m) {
    const double next = params.lambda * eval_f(u[m], params.L, params.k) /
                        params.k;
    if (next < underflow_eps) break;
    u[m + 1] = next;
  }
  OccupancyTail tail(std::move(u));
  tail.validate();  // monotone by construction; checked, not assumed
  return tail;
}

/// Decay bounds for the fixed-point tail at index m.
struct TailBoundPair {
  double upper = 1.0;
  double lower = 1.0;
  int m = 0;
};

/// upper = lambda^{((L/k)^m - 1)/(L/k - 1)}, lower =
/// lambda^{((L-k+1)^m - 1)/(L-k)}.  For k = 1 the two exponents are the
/// same expression and the bounds coincide bit for bit.  Huge exponents
/// underflow cleanly to 0.
inline TailBoundPair tail_bounds(int m, const SystemParams& params) {
  params.validate();
  if (m < 0) throw std::invalid_argument("tail_bounds: m must be >= 0");
  auto geometric_exponent = [m](double base) {
    return (std::pow(base, m) - 1.0) / (base - 1.0);
  };
  TailBoundPair out;
  out.m = m;
  out.upper = std::pow(params.lambda, geometric_exponent(
                                          static_cast<double>(params.L) /
                                          static_cast<double>(params.k)));
  out.lower = std::pow(params.lambda,
                       geometric_exponent(
                           static_cast<double>(params.L - params.k + 1)));
  return out;
}

}  // namespace mdslb
