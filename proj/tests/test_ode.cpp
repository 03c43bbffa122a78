#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "mdslb/errors.hpp"
#include "mdslb/ode.hpp"
#include "mdslb/rng.hpp"

using namespace mdslb;

namespace {

SystemParams params_for(int L, int k, double lambda) {
  SystemParams p;
  p.lambda = lambda;
  p.L = L;
  p.k = k;
  return p;
}

TruncatedOdeSpec make_spec(const SystemParams& p, int K, double c,
                           const std::vector<double>& g) {
  TruncatedOdeSpec spec;
  spec.params = p;
  spec.K = K;
  spec.c = c;
  spec.g = g;
  return spec;
}

std::vector<double> ubar_slice(const OccupancyTail& ubar, int K) {
  std::vector<double> g(K);
  for (int j = 1; j <= K; ++j) g[j - 1] = ubar.at(j);
  return g;
}

}  // namespace

TEST_CASE("rhs vanishes at the fixed point") {
  const SystemParams p = params_for(3, 2, 0.7);
  const int K = 12;
  const OccupancyTail ubar = fixed_point(p, K + 2);
  std::vector<double> s(K + 2);
  for (int j = 0; j <= K + 1; ++j) s[j] = ubar.at(j);
  const std::vector<double> ds = truncated_rhs(s, p);
  for (double v : ds) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("rhs from an empty system only feeds the first level") {
  const SystemParams p = params_for(3, 2, 0.7);
  std::vector<double> s(8, 0.0);
  s[0] = 1.0;
  const std::vector<double> ds = truncated_rhs(s, p);
  CHECK(ds[0] == Catch::Approx(p.lambda * p.k).margin(1e-14));
  for (std::size_t j = 1; j < ds.size(); ++j) CHECK(ds[j] == 0.0);
}

TEST_CASE("rhs for K = 1 reduces to the scalar equation") {
  const SystemParams p = params_for(4, 2, 0.6);
  for (double s1 : {0.0, 0.3, 0.8, 1.0}) {
    const std::vector<double> s = {1.0, s1, 0.0};
    const std::vector<double> ds = truncated_rhs(s, p);
    const double expected =
        p.lambda * (p.k - eval_f(s1, p.L, p.k)) - p.k * s1;
    CHECK(ds[0] == Catch::Approx(expected).margin(1e-13));
  }
}

TEST_CASE("rhs rejects states outside the unit interval") {
  const SystemParams p = params_for(3, 2, 0.7);
  CHECK_THROWS_AS(truncated_rhs(std::vector<double>{1.0, 1.2, 0.0}, p),
                  std::invalid_argument);
  CHECK_THROWS_AS(truncated_rhs(std::vector<double>{1.0, -0.2, 0.0}, p),
                  std::invalid_argument);
}

TEST_CASE("the fixed point is stationary under integration") {
  const SystemParams p = params_for(3, 2, 0.7);
  const int K = 10;
  const OccupancyTail ubar = fixed_point(p, K + 2);
  const TruncatedOdeSpec spec =
      make_spec(p, K, ubar.at(K + 1), ubar_slice(ubar, K));
  const Trajectory traj = integrate(spec, 10.0, 0.005, 100);
  for (const TrajectorySample& s : traj.samples) {
    for (int j = 1; j <= K; ++j) {
      CHECK(std::abs(s.state.u[j] - ubar.at(j)) < 1e-8);
    }
  }
}

TEST_CASE("u1 relaxes to lambda from an empty start") {
  // The tail of the approach decays like k(1 - lambda), so the horizon is
  // scaled accordingly; T = 50/k only suffices at moderate load.
  for (const auto& [L, k, lambda] :
       {std::tuple{3, 2, 0.7}, std::tuple{2, 1, 0.5}, std::tuple{4, 2, 0.9}}) {
    const SystemParams p = params_for(L, k, lambda);
    const int K = 10;
    const TruncatedOdeSpec spec =
        make_spec(p, K, 0.0, std::vector<double>(K, 0.0));
    const double T = std::max(50.0 / k, 40.0 / (k * (1.0 - lambda)));
    const Trajectory traj = integrate(spec, T, 0.01 / k, 50);
    double prev = -1.0;
    for (const TrajectorySample& s : traj.samples) {
      CHECK(s.state.u[1] >= prev - 1e-10);  // nondecreasing toward lambda
      prev = s.state.u[1];
    }
    CHECK(std::abs(traj.samples.back().state.u[1] - lambda) < 1e-6);
  }
}

TEST_CASE("every integrated state keeps the ordering") {
  const SystemParams p = params_for(3, 2, 0.7);
  const int K = 12;
  SplitMix64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> g(K);
    double level = 1.0;
    for (int j = 0; j < K; ++j) {
      level *= uniform_double(rng);
      g[j] = level;
    }
    const Trajectory traj = integrate(make_spec(p, K, 0.0, g), 15.0, 0.005, 20);
    for (const TrajectorySample& s : traj.samples) {
      double prev = 1.0;
      for (int j = 1; j <= K; ++j) {
        CHECK(s.state.u[j] <= prev + 1e-8);
        prev = s.state.u[j];
      }
      CHECK(prev >= -1e-8);  // last coordinate stays above c = 0
    }
  }
}

TEST_CASE("sample thinning keeps endpoints and spacing") {
  const SystemParams p = params_for(3, 2, 0.7);
  const TruncatedOdeSpec spec = make_spec(p, 4, 0.0,
                                          std::vector<double>(4, 0.0));
  const Trajectory traj = integrate(spec, 1.0, 0.01, 25);
  REQUIRE(traj.samples.size() == 5);  // t = 0, .25, .5, .75, 1.0
  CHECK(traj.samples.front().t == 0.0);
  CHECK(traj.samples.back().t == Catch::Approx(1.0));
}

TEST_CASE("integrate validates its arguments") {
  const SystemParams p = params_for(3, 2, 0.7);
  const TruncatedOdeSpec spec = make_spec(p, 3, 0.0, {0.5, 0.2, 0.1});
  CHECK_THROWS_AS(integrate(spec, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate(spec, 0.001, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(integrate(make_spec(p, 3, 0.0, {0.5, 0.6, 0.1}), 1.0, 0.01),
                  std::invalid_argument);  // unordered initial data
}

TEST_CASE("a badly oversized step aborts with a step-instability error") {
  const SystemParams p = params_for(3, 2, 0.9);
  const int K = 6;
  const TruncatedOdeSpec spec =
      make_spec(p, K, 0.0, std::vector<double>(K, 0.0));
  CHECK_THROWS_AS(integrate(spec, 400.0, 40.0), StepInstabilityError);
}

TEST_CASE("monotone coupling of ordered pairs") {
  const SystemParams p = params_for(3, 2, 0.7);
  const int K = 12;
  const OccupancyTail ubar = fixed_point(p, K + 2);
  SplitMix64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> upper(K), lower(K);
    double level = 1.0;
    for (int j = 0; j < K; ++j) {
      level *= uniform_double(rng);
      upper[j] = std::max(ubar.at(j + 1), level);
      lower[j] = std::min(ubar.at(j + 1), level);
    }
    const Trajectory a = integrate(make_spec(p, K, 0.0, upper), 15.0, 0.005, 10);
    const Trajectory b = integrate(make_spec(p, K, 0.0, lower), 15.0, 0.005, 10);
    CHECK(check_pair_order(a, b) < 1e-8);
  }
}

TEST_CASE("coupling with ordered boundary values") {
  const SystemParams p = params_for(3, 2, 0.7);
  const int K = 10;
  const OccupancyTail ubar = fixed_point(p, K + 2);
  const std::vector<double> g = ubar_slice(ubar, K);
  const Trajectory a =
      integrate(make_spec(p, K, ubar.at(K + 1), g), 15.0, 0.005, 10);
  const Trajectory b = integrate(make_spec(p, K, 0.0, g), 15.0, 0.005, 10);
  CHECK(check_pair_order(a, b) < 1e-8);
}

TEST_CASE("check_pair_order rejects mismatched grids") {
  const SystemParams p = params_for(3, 2, 0.7);
  const TruncatedOdeSpec spec = make_spec(p, 3, 0.0, {0.5, 0.2, 0.1});
  const Trajectory a = integrate(spec, 1.0, 0.01);
  const Trajectory b = integrate(spec, 1.0, 0.005);
  CHECK_THROWS_AS(check_pair_order(a, b), GridMismatchError);
  CHECK(check_pair_order(a, a) == 0.0);
}

TEST_CASE("truncation monotonicity: K+1 dominates K") {
  const SystemParams p = params_for(3, 2, 0.7);
  for (int K : {4, 8}) {
    std::vector<double> g(K, 0.0);
    std::vector<double> g_ext(K + 1, 0.0);
    const Trajectory small = integrate(make_spec(p, K, 0.0, g), 10.0, 0.005, 10);
    const Trajectory big =
        integrate(make_spec(p, K + 1, 0.0, g_ext), 10.0, 0.005, 10);
    REQUIRE(small.samples.size() == big.samples.size());
    for (std::size_t i = 0; i < small.samples.size(); ++i) {
      for (int j = 1; j <= K; ++j) {
        CHECK(big.samples[i].state.u[j] >=
              small.samples[i].state.u[j] - 1e-8);
      }
    }
  }
}

TEST_CASE("taylor envelope holds on integrator output") {
  const SystemParams p = params_for(3, 2, 0.5);
  const int K = 10;
  const Trajectory traj =
      integrate(make_spec(p, K, 0.0, std::vector<double>(K, 0.0)), 5.0, 0.005,
                10);
  CHECK(check_taylor_envelope(traj, p) < 1e-8);
  // at t = 0 the envelope is the initial condition itself
  const Trajectory head{{traj.samples.front()}, traj.step};
  CHECK(check_taylor_envelope(head, p) == 0.0);
  // the j = 1 envelope from an empty start is lambda k t
  for (const TrajectorySample& s : traj.samples) {
    CHECK(s.state.u[1] <= p.lambda * p.k * s.t + 1e-8);
  }
}

TEST_CASE("moment growth bound holds on integrator output") {
  const SystemParams p = params_for(3, 2, 0.5);
  const int K = 20;
  std::vector<double> g(K);
  for (int j = 1; j <= K; ++j) g[j - 1] = std::pow(0.9, j);
  const Trajectory traj = integrate(make_spec(p, K, 0.0, g), 20.0, 0.005, 40);
  CHECK(check_moment_bound(traj, p) < 1e-8);

  // stationary start: v1 constant while the bound grows
  const OccupancyTail ubar = fixed_point(p, K + 2);
  const Trajectory stat =
      integrate(make_spec(p, K, ubar.at(K + 1), ubar_slice(ubar, K)), 10.0,
                0.005, 40);
  CHECK(check_moment_bound(stat, p) == 0.0);
}

TEST_CASE("run_to_steady returns immediately at the fixed point") {
  const SystemParams p = params_for(3, 2, 0.7);
  const OccupancyTail ubar = fixed_point(p, 16);
  const SteadyRunResult res = run_to_steady(ubar, p, 1e-6, 50.0, 0.005);
  CHECK(res.converged);
  CHECK(res.t_hit == 0.0);
}

TEST_CASE("run_to_steady converges from an empty start") {
  const SystemParams p = params_for(3, 2, 0.7);
  const OccupancyTail empty(std::vector<double>{1.0});
  const SteadyRunResult res = run_to_steady(empty, p, 1e-6, 200.0, 0.005);
  CHECK(res.converged);
  CHECK(res.t_hit > 0.0);
  CHECK(res.t_hit < 200.0);
  const OccupancyTail ubar = fixed_point(p, 16);
  CHECK(rho_distance(res.final_state, ubar) < 1e-6);
}

TEST_CASE("run_to_steady from above stays above and dissipates v1") {
  const SystemParams p = params_for(3, 2, 0.7);
  const OccupancyTail ubar = fixed_point(p, 16);
  std::vector<double> g(ubar.size());
  g[0] = 1.0;
  for (std::size_t j = 1; j < g.size(); ++j) {
    g[j] = std::min(1.0, 2.0 * ubar.u[j]);
  }
  std::vector<TrajectorySample> samples;
  const SteadyRunResult res = run_to_steady(OccupancyTail(g), p, 1e-6, 200.0,
                                            0.005, &samples, 0.05);
  CHECK(res.converged);
  double prev_v1 = 1e300;
  for (const TrajectorySample& s : samples) {
    for (std::size_t j = 1; j < s.state.size(); ++j) {
      CHECK(s.state.u[j] >= ubar.at(j) - 1e-8);  // domination is preserved
    }
    const double v1 = v_moment(s.state, 1);
    CHECK(v1 <= prev_v1 + 1e-9);  // v1 nonincreasing from above
    prev_v1 = v1;
  }
}

TEST_CASE("tail dynamics are the cumulative sums of the pmf drift") {
  // With u = iota(r) and zero boundary past the support, the truncated
  // system's derivative at level j must equal sum_{i >= j} F(r)_i.  This
  // ties the two formulations together through the identification map.
  SplitMix64 rng(23);
  for (const auto& [L, k] : {std::pair{3, 2}, std::pair{4, 3}, std::pair{5, 3}}) {
    const SystemParams p = params_for(L, k, 0.7);
    for (int trial = 0; trial < 50; ++trial) {
      const int len = 2 + static_cast<int>(uniform_below(rng, 10));
      std::vector<double> w(len);
      double sum = 0.0;
      for (double& v : w) {
        v = exponential(rng, 1.0);
        sum += v;
      }
      for (double& v : w) v /= sum;
      const OccupancyPmf r(w);
      const OccupancyTail u = iota(r);

      const int K = static_cast<int>(r.size());
      std::vector<double> s(K + 2, 0.0);
      s[0] = 1.0;
      for (int j = 1; j <= K; ++j) {
        s[j] = std::clamp(u.at(j), 0.0, 1.0);
      }
      const std::vector<double> ds = truncated_rhs(s, p);

      const std::vector<double> F = drift_F(r, p);
      for (int j = 1; j <= K; ++j) {
        double tail_flow = 0.0;
        for (std::size_t i = static_cast<std::size_t>(j); i < F.size(); ++i) {
          tail_flow += F[i];
        }
        CHECK(ds[j - 1] == Catch::Approx(tail_flow).margin(1e-12));
      }
    }
  }
}

TEST_CASE("steady-state driver argument errors") {
  const SystemParams p = params_for(3, 2, 0.7);
  const OccupancyTail g(std::vector<double>{1.0});
  CHECK_THROWS_AS(run_to_steady(g, p, 0.0, 10.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(run_to_steady(g, p, 1e-6, 10.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(run_to_steady(g, p, 1e-6, -1.0, 0.01),
                  std::invalid_argument);
}

TEST_CASE("halving the step barely moves the final state") {
  const SystemParams p = params_for(3, 2, 0.7);
  const int K = 12;
  const TruncatedOdeSpec spec =
      make_spec(p, K, 0.0, std::vector<double>(K, 0.0));
  const Trajectory coarse = integrate(spec, 20.0, 0.01, 1 << 20);
  const Trajectory fine = integrate(spec, 20.0, 0.005, 1 << 20);
  CHECK(rho_distance(coarse.samples.back().state,
                     fine.samples.back().state) < 1e-8);
}
