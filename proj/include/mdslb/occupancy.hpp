#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdslb {

// Validation tolerances.  Probability mass must balance to 1e-12; the tail
// invariants get a looser 1e-9 band because integrator output carries
// projection noise at that scale.
inline constexpr double kPmfSumTol = 1e-12;
inline constexpr double kTailTol = 1e-9;

/// Truncated queue-length pmf: p[i] is the fraction of queues with length
/// exactly i.  Entries beyond the stored range are treated as 0.
struct OccupancyPmf {
  std::vector<double> p;

  OccupancyPmf() = default;
  explicit OccupancyPmf(std::vector<double> values) : p(std::move(values)) {}

  std::size_t size() const { return p.size(); }

  void validate() const {
    if (p.empty()) throw std::invalid_argument("OccupancyPmf: empty vector");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= -kPmfSumTol)) {
        throw std::invalid_argument("OccupancyPmf: negative entry " +
                                    std::to_string(v));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kPmfSumTol) {
      throw std::invalid_argument("OccupancyPmf: entries sum to " +
                                  std::to_string(sum) + ", expected 1");
    }
  }
};

/// Truncated occupancy tail: u[i] is the fraction of queues with length at
/// least i, so u[0] = 1 and the entries decrease.
struct OccupancyTail {
  std::vector<double> u;

  OccupancyTail() = default;
  explicit OccupancyTail(std::vector<double> values) : u(std::move(values)) {}

  std::size_t size() const { return u.size(); }

  /// Entry with zero-extension past the truncation point.
  double at(std::size_t j) const { return j < u.size() ? u[j] : 0.0; }

  void validate(double tol = kTailTol) const {
    if (u.empty()) throw std::invalid_argument("OccupancyTail: empty vector");
    if (std::abs(u[0] - 1.0) > tol) {
      throw std::invalid_argument("OccupancyTail: u0 = " +
                                  std::to_string(u[0]) + ", expected 1");
    }
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (!(u[j] >= -tol && u[j] <= 1.0 + tol)) {
        throw std::invalid_argument("OccupancyTail: entry outside [0,1]");
      }
      if (j + 1 < u.size() && u[j + 1] > u[j] + tol) {
        throw std::invalid_argument(
            "OccupancyTail: not monotone nonincreasing at index " +
            std::to_string(j + 1));
      }
    }
  }
};

/// One record of a time-evolving occupancy tail, shared by the ODE
/// integrator and the simulator.
struct TrajectorySample {
  double t = 0.0;
  OccupancyTail state;
};

/// Tail representation of a pmf: u_j = sum_{i >= j} r_i.
inline OccupancyTail iota(const OccupancyPmf& r) {
  r.validate();
  std::vector<double> u(r.size());
  double acc = 0.0;
  for (std::size_t j = r.size(); j-- > 0;) {
    acc += r.p[j];
    u[j] = acc;
  }
  return OccupancyTail(std::move(u));
}

/// Pmf of a tail vector: r_j = u_j - u_{j+1}, with u past the truncation
/// treated as 0.
inline OccupancyPmf iota_inv(const OccupancyTail& u) {
  u.validate();
  std::vector<double> r(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    r[j] = u.u[j] - u.at(j + 1);
  }
  return OccupancyPmf(std::move(r));
}

/// d0(mu, nu) = sum_{j>=0} |mu_j - nu_j| / 2^j; shorter input zero-padded.
inline double d0_distance(const OccupancyPmf& mu, const OccupancyPmf& nu) {
  const std::size_t m = std::max(mu.size(), nu.size());
  double sum = 0.0;
  double w = 1.0;
  for (std::size_t j = 0; j < m; ++j, w *= 0.5) {
    const double a = j < mu.size() ? mu.p[j] : 0.0;
    const double b = j < nu.size() ? nu.p[j] : 0.0;
    sum += std::abs(a - b) * w;
  }
  return sum;
}

/// rho(x, y) = sum_{j>=1} |x_j - y_j| / 2^j; shorter input zero-padded.
inline double rho_distance(const OccupancyTail& x, const OccupancyTail& y) {
  const std::size_t m = std::max(x.size(), y.size());
  double sum = 0.0;
  double w = 0.5;
  for (std::size_t j = 1; j < m; ++j, w *= 0.5) {
    sum += std::abs(x.at(j) - y.at(j)) * w;
  }
  return sum;
}

/// v_j(u) = sum_{i >= j} u_i over the truncated vector.  v_1 is the mean
/// queue length of the distribution u represents.
inline double v_moment(const OccupancyTail& u, int j) {
  if (j < 0) throw std::invalid_argument("v_moment: j must be >= 0");
  double sum = 0.0;
  for (std::size_t i = static_cast<std::size_t>(j); i < u.size(); ++i) {
    sum += u.u[i];
  }
  return sum;
}

}  // namespace mdslb
