#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "mdslb/model.hpp"
#include "mdslb/simulation.hpp"

using namespace mdslb;

namespace {

SystemParams params_for(int n, int L, int k, double lambda) {
  SystemParams p;
  p.n = n;
  p.lambda = lambda;
  p.L = L;
  p.k = k;
  return p;
}

}  // namespace

TEST_CASE("occupancy from queue vectors") {
  const auto [pmf_a, tail_a] = occupancy_from_queues(QueueVector({0, 0, 0}), 4);
  CHECK(pmf_a.p[0] == 1.0);
  CHECK(tail_a.u[0] == 1.0);
  CHECK(tail_a.u[1] == 0.0);

  const auto [pmf_b, tail_b] =
      occupancy_from_queues(QueueVector({0, 1, 1, 2}), 4);
  CHECK(pmf_b.p[0] == Catch::Approx(0.25));
  CHECK(pmf_b.p[1] == Catch::Approx(0.5));
  CHECK(pmf_b.p[2] == Catch::Approx(0.25));
  CHECK(tail_b.u[1] == Catch::Approx(0.75));
  CHECK(tail_b.u[2] == Catch::Approx(0.25));

  // overflow mass folds into the last tracked level
  const auto [pmf_c, tail_c] = occupancy_from_queues(QueueVector({9, 0}), 3);
  CHECK(pmf_c.p[3] == Catch::Approx(0.5));

  // n * pi_i is always an integer
  SplitMix64 rng(1);
  QueueVector q = QueueVector::empty(10);
  for (int& len : q.lengths) len = static_cast<int>(uniform_below(rng, 6));
  const auto [pmf_d, tail_d] = occupancy_from_queues(q, 8);
  for (double v : pmf_d.p) {
    CHECK(std::abs(v * 10 - std::round(v * 10)) < 1e-12);
  }

  CHECK_THROWS_AS(occupancy_from_queues(q, 0), std::invalid_argument);
  CHECK_THROWS_AS(occupancy_from_queues(QueueVector({-1}), 4),
                  std::invalid_argument);
}

TEST_CASE("route_targets picks the unique minimum") {
  const SystemParams p = params_for(4, 4, 1, 0.5);
  SplitMix64 rng(42);
  QueueVector q({0, 5, 5, 5});
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<int> targets = route_targets(q, p, rng);
    REQUIRE(targets.size() == 1);
    CHECK(targets[0] == 0);
  }
}

TEST_CASE("route_targets returns k distinct sampled servers") {
  const SystemParams p = params_for(10, 5, 3, 0.5);
  SplitMix64 rng(43);
  QueueVector q(std::vector<int>(10, 2));  // full tie
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> targets = route_targets(q, p, rng);
    REQUIRE(targets.size() == 3);
    std::sort(targets.begin(), targets.end());
    CHECK(std::unique(targets.begin(), targets.end()) == targets.end());
    for (int s : targets) {
      CHECK(s >= 0);
      CHECK(s < 10);
    }
  }
}

TEST_CASE("route_targets frequency matches subset enumeration") {
  // n=4, L=2, k=1, lengths (0,1,2,3): server 0 wins in the 3 subsets that
  // contain it out of C(4,2) = 6, so it is targeted with frequency 1/2.
  const SystemParams p = params_for(4, 2, 1, 0.5);
  SplitMix64 rng(2025);
  QueueVector q({0, 1, 2, 3});
  const int draws = 1000000;
  std::array<int, 4> hits{};
  for (int i = 0; i < draws; ++i) {
    hits[route_targets(q, p, rng)[0]] += 1;
  }
  CHECK(std::abs(hits[0] / static_cast<double>(draws) - 0.5) < 0.002);
  // server 1 wins in the two subsets {1,2}, {1,3}: frequency 1/3
  CHECK(std::abs(hits[1] / static_cast<double>(draws) - 1.0 / 3.0) < 0.002);
}

TEST_CASE("tied servers are targeted uniformly") {
  const SystemParams p = params_for(4, 2, 1, 0.5);
  SplitMix64 rng(77);
  QueueVector q({1, 1, 1, 1});
  const int draws = 400000;
  std::array<int, 4> hits{};
  for (int i = 0; i < draws; ++i) {
    hits[route_targets(q, p, rng)[0]] += 1;
  }
  for (int s = 0; s < 4; ++s) {
    CHECK(std::abs(hits[s] / static_cast<double>(draws) - 0.25) < 0.003);
  }
}

TEST_CASE("advance_event from an empty system is always an arrival") {
  const SystemParams p = params_for(6, 3, 2, 0.4);
  SplitMix64 rng(5);
  double dt_sum = 0.0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    QueueVector q = QueueVector::empty(6);
    const QueueEvent ev = advance_event(q, p, 0, rng);
    CHECK(ev.kind == EventKind::kArrival);
    CHECK(ev.changes.size() == 2);  // k targets each gained one job
    int total = 0;
    for (int len : q.lengths) total += len;
    CHECK(total == 2);
    dt_sum += ev.dt;
  }
  // dt ~ Exp(n lambda): mean 1/2.4, stderr mean/sqrt(trials)
  const double mean = dt_sum / trials;
  CHECK(std::abs(mean - 1.0 / 2.4) < 4.0 * (1.0 / 2.4) / std::sqrt(trials));
}

TEST_CASE("advance_event two-clock race probability") {
  // Q = (1,0,...,0): service rate k, arrival rate n lambda, so the event is
  // a service with probability k / (k + n lambda).
  const SystemParams p = params_for(5, 3, 2, 0.4);
  SplitMix64 rng(6);
  const int trials = 200000;
  int services = 0;
  for (int i = 0; i < trials; ++i) {
    QueueVector q({1, 0, 0, 0, 0});
    const QueueEvent ev = advance_event(q, p, 0, rng);
    if (ev.kind == EventKind::kService) {
      services += 1;
      CHECK(q.lengths[0] == 0);
    }
  }
  const double expect = 2.0 / (2.0 + 5 * 0.4);
  const double se = std::sqrt(expect * (1 - expect) / trials);
  CHECK(std::abs(services / static_cast<double>(trials) - expect) < 4 * se);
}

TEST_CASE("arrival jump matches the k smallest of the sampled subset") {
  const SystemParams p = params_for(8, 4, 2, 0.6);
  SplitMix64 rng(7);
  QueueVector q({0, 3, 1, 2, 5, 1, 0, 4});
  for (int trial = 0; trial < 5000; ++trial) {
    const QueueVector before = q;
    const QueueEvent ev = advance_event(q, p, 0, rng);
    if (ev.kind == EventKind::kArrival) {
      REQUIRE(ev.sampled_lengths.size() == 4);
      std::vector<int> changed;
      for (const auto& [srv, old_len] : ev.changes) {
        CHECK(q.lengths[srv] == old_len + 1);
        changed.push_back(old_len);
      }
      std::sort(changed.begin(), changed.end());
      for (std::size_t i = 0; i < changed.size(); ++i) {
        CHECK(changed[i] == ev.sampled_lengths[i]);
      }
    }
    q = before;  // keep the test state fixed
  }
}

TEST_CASE("capped arrivals leave full queues unchanged") {
  const SystemParams p = params_for(3, 3, 2, 0.5);
  SplitMix64 rng(8);
  QueueVector q({3, 2, 3});
  for (int trial = 0; trial < 2000; ++trial) {
    const QueueEvent ev = advance_event(q, p, 3, rng);
    for (int len : q.lengths) CHECK(len <= 3);
    if (ev.kind == EventKind::kArrival) {
      for (const auto& [srv, old_len] : ev.changes) CHECK(old_len < 3);
    }
  }
}

TEST_CASE("simulate_steady is deterministic for a fixed seed") {
  SimConfig cfg;
  cfg.params = params_for(20, 3, 2, 0.5);
  cfg.seed = 12345;
  cfg.warmup_time = 50.0;
  cfg.measure_time = 500.0;
  const SteadyEstimate a = simulate_steady(cfg);
  const SteadyEstimate b = simulate_steady(cfg);
  REQUIRE(a.u_hat.size() == b.u_hat.size());
  for (std::size_t i = 0; i < a.u_hat.size(); ++i) {
    CHECK(a.u_hat.u[i] == b.u_hat.u[i]);
    CHECK(a.std_err[i] == b.std_err[i]);
  }
  CHECK(a.total_events == b.total_events);

  SimConfig other = cfg;
  other.seed = 54321;
  const SteadyEstimate c = simulate_steady(other);
  CHECK(a.u_hat.u[1] != c.u_hat.u[1]);
}

TEST_CASE("light traffic: busy fraction approaches lambda") {
  SimConfig cfg;
  cfg.params = params_for(100, 3, 2, 0.01);
  cfg.seed = 9;
  cfg.warmup_time = 500.0;
  cfg.measure_time = 10000.0;
  const SteadyEstimate est = simulate_steady(cfg);
  CHECK(std::abs(est.u_hat.u[1] - 0.01) <=
        std::max(3.0 * est.std_err[1], 1e-3));
}

TEST_CASE("mean-field agreement at n = 200") {
  SimConfig cfg;
  cfg.params = params_for(200, 3, 2, 0.7);
  cfg.seed = 31;
  cfg.warmup_time = 500.0;
  cfg.measure_time = 20000.0;
  const SteadyEstimate est = simulate_steady(cfg);
  const OccupancyTail ubar = fixed_point(cfg.params, kMaxTrackedLen);
  for (int m = 1; m <= 5; ++m) {
    CHECK(std::abs(est.u_hat.u[m] - ubar.at(m)) <=
          std::max(0.02, 3.0 * est.std_err[m]));
  }
  est.u_hat.validate();
}

TEST_CASE("audit counters: event rates and jumps") {
  SimConfig cfg;
  cfg.params = params_for(50, 3, 2, 0.7);
  cfg.seed = 13;
  cfg.warmup_time = 100.0;
  cfg.measure_time = 5000.0;
  AuditStats audit;
  simulate_steady(cfg, nullptr, &audit);
  CHECK(audit.jump_mismatches == 0);
  CHECK(audit.counter_mismatches == 0);
  CHECK(audit.arrivals > 0);
  CHECK(audit.services > 0);
  // realized service count vs the summed per-event service probability
  const double diff = std::abs(audit.services - audit.expected_services);
  CHECK(diff <= 3.0 * std::sqrt(audit.expected_service_var));
}

TEST_CASE("simulator trajectory is thinned and starts at the warmup") {
  SimConfig cfg;
  cfg.params = params_for(10, 2, 1, 0.5);
  cfg.seed = 3;
  cfg.warmup_time = 10.0;
  cfg.measure_time = 100.0;
  cfg.thinning = 5.0;
  std::vector<TrajectorySample> traj;
  simulate_steady(cfg, &traj, nullptr);
  REQUIRE(traj.size() == 20);  // one sample per 5 time units
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(traj[i].t == Catch::Approx(5.0 * i));
    traj[i].state.validate();
  }
}

TEST_CASE("config validation") {
  SimConfig cfg;
  cfg.params = params_for(1, 3, 2, 0.5);  // n < L
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.params = params_for(10, 3, 2, 0.5);
  cfg.measure_time = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.measure_time = 10.0;
  cfg.cap = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
