#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdslb/errors.hpp"
#include "mdslb/model.hpp"
#include "mdslb/occupancy.hpp"
#include "mdslb/params.hpp"

namespace mdslb {

// Projection policy for integrator states: violations of [0,1] or of the
// ordering below kSilentProjectTol are projected silently, violations up to
// kAbortTol are projected with a warning, anything larger aborts the run.
inline constexpr double kSilentProjectTol = 1e-9;
inline constexpr double kAbortTol = 1e-6;

/// Boundary value problem for the truncated occupancy tail: K free
/// coordinates s_1..s_K between the pinned values s_0 = 1 and s_{K+1} = c.
struct TruncatedOdeSpec {
  int K = 0;
  double c = 0.0;
  SystemParams params;
  std::vector<double> g;  // initial s_1..s_K

  void validate() const {
    params.validate();
    if (K < 1) throw std::invalid_argument("TruncatedOdeSpec: K must be >= 1");
    if (!(c >= 0.0 && c <= 1.0)) {
      throw std::invalid_argument("TruncatedOdeSpec: c must lie in [0,1]");
    }
    if (static_cast<int>(g.size()) != K) {
      throw std::invalid_argument(
          "TruncatedOdeSpec: g must provide exactly K coordinates");
    }
    double prev = 1.0;
    for (double v : g) {
      if (v > prev + kTailTol) {
        throw std::invalid_argument(
            "TruncatedOdeSpec: initial data must satisfy 1 >= g1 >= ... >= gK");
      }
      prev = v;
    }
    if (!g.empty() && g.back() < c - kTailTol) {
      throw std::invalid_argument("TruncatedOdeSpec: require gK >= c");
    }
  }
};

/// Fixed-step trajectory of occupancy tails (u_0 = 1 included in each state).
struct Trajectory {
  std::vector<TrajectorySample> samples;
  double step = 0.0;
};

namespace detail {

// ds_j = lambda [f(s_{j-1}) - f(s_j)] - k [s_j - s_{j+1}],  j = 1..K.
// s spans the padded vector (s_0, ..., s_{K+1}); no domain checks here.
inline void truncated_rhs_into(std::span<const double> s,
                               const SystemParams& p, std::span<double> out,
                               std::vector<double>& fbuf) {
  const int K = static_cast<int>(s.size()) - 2;
  fbuf.resize(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    fbuf[j] = eval_f(s[j], p.L, p.k);
  }
  for (int j = 1; j <= K; ++j) {
    out[j - 1] = p.lambda * (fbuf[j - 1] - fbuf[j]) - p.k * (s[j] - s[j + 1]);
  }
}

}  // namespace detail

/// Right-hand side of the truncated system.  s must contain the boundary
/// values: s[0] = 1 and s[K+1] = c, size K+2.  Returns the K derivatives.
inline std::vector<double> truncated_rhs(std::span<const double> s,
                                         const SystemParams& params) {
  params.validate();
  if (s.size() < 3) {
    throw std::invalid_argument("truncated_rhs: need at least K=1 plus both "
                                "boundary values");
  }
  for (double v : s) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("truncated_rhs: state outside [0,1]");
    }
  }
  std::vector<double> out(s.size() - 2);
  std::vector<double> fbuf;
  detail::truncated_rhs_into(s, params, out, fbuf);
  return out;
}

namespace detail {

// One classical 4th-order step of size dt on the free coordinates of y
// (y[0] and y[K+1] stay pinned).  Stage arguments are clamped to [0,1]
// so the polynomial is never evaluated outside its domain; committed
// states are policed separately.
class Rk4Stepper {
 public:
  Rk4Stepper(const SystemParams& p, int K) : p_(p), K_(K) {
    k1_.resize(K); k2_.resize(K); k3_.resize(K); k4_.resize(K);
    tmp_.resize(K + 2);
  }

  void step(std::vector<double>& y, double dt) {
    rhs(y, k1_);
    stage(y, k1_, dt * 0.5);
    rhs(tmp_, k2_);
    stage(y, k2_, dt * 0.5);
    rhs(tmp_, k3_);
    stage(y, k3_, dt);
    rhs(tmp_, k4_);
    for (int j = 1; j <= K_; ++j) {
      y[j] += dt / 6.0 *
              (k1_[j - 1] + 2.0 * k2_[j - 1] + 2.0 * k3_[j - 1] + k4_[j - 1]);
    }
  }

 private:
  void rhs(const std::vector<double>& y, std::vector<double>& out) {
    truncated_rhs_into(y, p_, out, fbuf_);
  }

  void stage(const std::vector<double>& y, const std::vector<double>& slope,
             double h) {
    tmp_[0] = y[0];
    tmp_[K_ + 1] = y[K_ + 1];
    for (int j = 1; j <= K_; ++j) {
      tmp_[j] = std::clamp(y[j] + h * slope[j - 1], 0.0, 1.0);
    }
  }

  const SystemParams& p_;
  int K_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_, fbuf_;
};

// Measures how far y strays from the admissible set, projects it back, and
// applies the warn/abort policy.  Returns the violation magnitude.
inline double police_state(std::vector<double>& y, double t, bool& warned) {
  const int K = static_cast<int>(y.size()) - 2;
  double viol = 0.0;
  for (int j = 1; j <= K; ++j) {
    viol = std::max(viol, -y[j]);
    viol = std::max(viol, y[j] - 1.0);
    viol = std::max(viol, y[j] - y[j - 1]);
  }
  viol = std::max(viol, y[K + 1] - y[K]);
  if (viol > kAbortTol) {
    throw StepInstabilityError("integration unstable at t=" +
                               std::to_string(t) + " (violation " +
                               std::to_string(viol) +
                               "); reduce the step size");
  }
  if (viol > kSilentProjectTol && !warned) {
    std::cerr << "warning: projecting state violation " << viol << " at t="
              << t << "\n";
    warned = true;
  }
  for (int j = 1; j <= K; ++j) {
    y[j] = std::clamp(y[j], 0.0, 1.0);
    y[j] = std::min(y[j], y[j - 1]);
  }
  for (int j = K; j >= 1; --j) {
    y[j] = std::max(y[j], y[j + 1]);
  }
  return viol;
}

inline OccupancyTail tail_from_padded(const std::vector<double>& y) {
  const int K = static_cast<int>(y.size()) - 2;
  return OccupancyTail(std::vector<double>(y.begin(), y.begin() + K + 1));
}

}  // namespace detail

/// Integrates the truncated system with a classical 4th-order fixed step,
/// recording every sample_stride-th state (plus the initial and final one).
inline Trajectory integrate(const TruncatedOdeSpec& spec, double T, double dt,
                            int sample_stride = 1) {
  spec.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
  if (T < dt) throw std::invalid_argument("integrate: require T >= dt");
  if (sample_stride < 1) {
    throw std::invalid_argument("integrate: sample_stride must be >= 1");
  }

  std::vector<double> y(spec.K + 2);
  y[0] = 1.0;
  std::copy(spec.g.begin(), spec.g.end(), y.begin() + 1);
  y[spec.K + 1] = spec.c;

  const long long steps = std::llround(T / dt);
  detail::Rk4Stepper stepper(spec.params, spec.K);
  bool warned = false;

  Trajectory traj;
  traj.step = dt;
  traj.samples.push_back({0.0, detail::tail_from_padded(y)});
  for (long long i = 1; i <= steps; ++i) {
    stepper.step(y, dt);
    detail::police_state(y, i * dt, warned);
    if (i % sample_stride == 0 || i == steps) {
      traj.samples.push_back({i * dt, detail::tail_from_padded(y)});
    }
  }
  return traj;
}

/// Outcome of driving the system toward the fixed point.
struct SteadyRunResult {
  OccupancyTail final_state;
  double t_hit = 0.0;
  bool converged = false;
};

/// Picks the truncation level for steady-state runs: the first index where
/// the fixed point drops below 1e-14 (at least 2, at most 64).
inline int steady_truncation_level(const SystemParams& params) {
  const OccupancyTail ubar = fixed_point(params, 64);
  for (int K = 2; K < 64; ++K) {
    if (ubar.u[K] < 1e-14) return K;
  }
  return 64;
}

/// Integrates with boundary c = 0 until rho(u(t), u_bar) < tol or t hits
/// max_T.  Optionally records the trajectory thinned to the given time
/// interval.  truncation = 0 picks the level automatically; an explicit
/// value is widened only if g carries mass past it.
inline SteadyRunResult run_to_steady(const OccupancyTail& g,
                                     const SystemParams& params, double tol,
                                     double max_T, double dt,
                                     std::vector<TrajectorySample>* samples =
                                         nullptr,
                                     double thinning = 0.0,
                                     int truncation = 0) {
  params.validate();
  g.validate();
  if (!(tol > 0.0)) {
    throw std::invalid_argument("run_to_steady: tol must be > 0");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("run_to_steady: dt must be > 0");
  if (max_T < 0.0) {
    throw std::invalid_argument("run_to_steady: max_T must be >= 0");
  }
  if (truncation < 0) {
    throw std::invalid_argument("run_to_steady: truncation must be >= 0");
  }

  int K = truncation > 0 ? truncation : steady_truncation_level(params);
  for (std::size_t j = g.size(); j-- > 1;) {
    if (g.u[j] > 0.0) {
      K = std::max(K, static_cast<int>(j));
      break;
    }
  }
  const OccupancyTail ubar = fixed_point(params, std::max(K + 1, 64));

  std::vector<double> y(K + 2, 0.0);
  y[0] = 1.0;
  for (int j = 1; j <= K; ++j) y[j] = g.at(j);

  const long long stride =
      thinning > 0.0 ? std::max<long long>(1, std::llround(thinning / dt)) : 1;
  auto current = [&] { return detail::tail_from_padded(y); };

  // rho against the fixed point; the fixed-point mass past K contributes a
  // constant term since the truncated state is zero there.
  double tail_term = 0.0;
  for (std::size_t j = ubar.size(); j-- > static_cast<std::size_t>(K) + 1;) {
    tail_term += ubar.u[j] / std::ldexp(1.0, static_cast<int>(j));
  }
  auto rho_to_ubar = [&] {
    double sum = tail_term;
    double w = 0.5;
    for (int j = 1; j <= K; ++j, w *= 0.5) {
      sum += std::abs(y[j] - ubar.at(j)) * w;
    }
    return sum;
  };

  if (samples) samples->push_back({0.0, current()});
  if (rho_to_ubar() < tol) {
    return {current(), 0.0, true};
  }

  detail::Rk4Stepper stepper(params, K);
  bool warned = false;
  const long long steps = std::llround(max_T / dt);
  for (long long i = 1; i <= steps; ++i) {
    stepper.step(y, dt);
    detail::police_state(y, i * dt, warned);
    if (samples && (i % stride == 0 || i == steps)) {
      samples->push_back({i * dt, current()});
    }
    if (rho_to_ubar() < tol) {
      return {current(), i * dt, true};
    }
  }
  return {current(), max_T, false};
}

/// Max over (t, j) of (b_j(t) - a_j(t))_+ for trajectories sharing a time
/// grid; certifies that a dominates b throughout when it does at t = 0.
inline double check_pair_order(const Trajectory& a, const Trajectory& b) {
  if (a.samples.size() != b.samples.size() || a.step != b.step) {
    throw GridMismatchError("check_pair_order: trajectories use different "
                            "time grids");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (a.samples[i].t != b.samples[i].t) {
      throw GridMismatchError("check_pair_order: sample times differ");
    }
    const OccupancyTail& x = a.samples[i].state;
    const OccupancyTail& y = b.samples[i].state;
    if (x.size() != y.size()) {
      throw GridMismatchError("check_pair_order: truncation differs");
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      worst = std::max(worst, y.u[j] - x.u[j]);
    }
  }
  return worst;
}

/// Max violation of the Taylor-style envelope
/// u_j(t) <= sum_{i<=j} u_i(0) (lambda k t)^{j-i} / (j-i)!.
inline double check_taylor_envelope(const Trajectory& traj,
                                    const SystemParams& params) {
  params.validate();
  if (traj.samples.empty()) return 0.0;
  const OccupancyTail& u0 = traj.samples.front().state;
  const double rate = params.lambda * params.k;
  double worst = 0.0;
  std::vector<double> coeff;  // coeff[d] = (lambda k t)^d / d!
  for (const TrajectorySample& s : traj.samples) {
    const std::size_t n = s.state.size();
    coeff.assign(n, 0.0);
    coeff[0] = 1.0;
    for (std::size_t d = 1; d < n; ++d) {
      coeff[d] = coeff[d - 1] * rate * s.t / static_cast<double>(d);
    }
    for (std::size_t j = 0; j < n; ++j) {
      double envelope = 0.0;
      for (std::size_t i = 0; i <= j; ++i) {
        envelope += u0.at(i) * coeff[j - i];
      }
      worst = std::max(worst, s.state.u[j] - envelope);
    }
  }
  return worst;
}

/// Max violation of the first-moment growth bound
/// v_1(u(t)) <= exp(lambda k t) [1 + v_1(u(0))].
inline double check_moment_bound(const Trajectory& traj,
                                 const SystemParams& params) {
  params.validate();
  if (traj.samples.empty()) return 0.0;
  const double v1_0 = v_moment(traj.samples.front().state, 1);
  const double rate = params.lambda * params.k;
  double worst = 0.0;
  for (const TrajectorySample& s : traj.samples) {
    const double bound = std::exp(rate * s.t) * (1.0 + v1_0);
    worst = std::max(worst, v_moment(s.state, 1) - bound);
  }
  return worst;
}

}  // namespace mdslb
