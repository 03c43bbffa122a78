#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mdslb/occupancy.hpp"
#include "mdslb/params.hpp"
#include "mdslb/rng.hpp"

namespace mdslb {

// Deepest queue length the occupancy counters track.  Under lambda < 1 the
// steady-state tail underflows double precision long before this depth; a
// queue growing past it aborts the run instead of silently folding.
inline constexpr int kMaxTrackedLen = 64;

// Number of equal batches used for the batch-means standard error.
inline constexpr int kBatchCount = 20;

/// Per-server queue lengths (jobs in service included).
struct QueueVector {
  std::vector<int> lengths;

  QueueVector() = default;
  explicit QueueVector(std::vector<int> values) : lengths(std::move(values)) {}

  static QueueVector empty(int n) {
    return QueueVector(std::vector<int>(static_cast<std::size_t>(n), 0));
  }

  int n() const { return static_cast<int>(lengths.size()); }

  void validate(int cap = 0) const {
    for (int q : lengths) {
      if (q < 0) throw std::invalid_argument("QueueVector: negative length");
      if (cap > 0 && q > cap) {
        throw std::invalid_argument("QueueVector: length exceeds cap");
      }
    }
  }
};

enum class EventKind { kArrival, kService };

/// One jump of the chain: the elapsed exponential holding time, the event
/// kind, and the queues whose length changed (with their pre-jump lengths).
/// For arrivals, sampled_lengths holds the pre-jump lengths of the L
/// sampled servers in nondecreasing order.
struct QueueEvent {
  double dt = 0.0;
  EventKind kind = EventKind::kArrival;
  std::vector<std::pair<int, int>> changes;  // (server, pre-jump length)
  std::vector<int> sampled_lengths;
};

struct SimConfig {
  SystemParams params;
  std::uint64_t seed = 1;
  double warmup_time = 1000.0;
  double measure_time = 20000.0;
  int cap = 0;          // 0 = uncapped (the faithful model)
  double thinning = 0;  // trajectory sample interval; 0 = no trajectory

  void validate() const {
    params.validate_for_sim();
    if (warmup_time < 0.0) {
      throw std::invalid_argument("SimConfig: warmup_time must be >= 0");
    }
    if (!(measure_time > 0.0)) {
      throw std::invalid_argument("SimConfig: measure_time must be > 0");
    }
    if (cap < 0) throw std::invalid_argument("SimConfig: cap must be >= 0");
    if (thinning < 0.0) {
      throw std::invalid_argument("SimConfig: thinning must be >= 0");
    }
  }
};

/// Time-averaged occupancy with batch-means standard errors.
struct SteadyEstimate {
  OccupancyTail u_hat;
  std::vector<double> std_err;
  long long total_events = 0;
  double measure_time = 0.0;
};

/// Counters filled when the simulator runs with auditing on.
struct AuditStats {
  long long arrivals = 0;
  long long services = 0;
  long long jump_mismatches = 0;      // arrivals whose targets were not the
                                      // k shortest of the sampled subset
  long long counter_mismatches = 0;   // incremental tail counters vs a
                                      // recount from the queue lengths
  double expected_services = 0.0;     // sum of per-event service probability
  double expected_service_var = 0.0;  // sum of p(1-p), for a binomial stderr
};

namespace detail {

// Sorts the sampled servers by (queue length, random 64-bit tag) and keeps
// the k shortest.  The random tag makes ties uniform over tied servers.
inline void pick_k_shortest(const std::vector<int>& lengths,
                            std::vector<int>& sampled, int k,
                            SplitMix64& rng,
                            std::vector<std::pair<std::uint64_t, int>>& buf) {
  buf.clear();
  for (int s : sampled) {
    const auto key = (static_cast<std::uint64_t>(lengths[s]) << 40) | (rng() >> 24);
    buf.emplace_back(key, s);
  }
  std::sort(buf.begin(), buf.end());
  sampled.clear();
  for (int i = 0; i < k; ++i) sampled.push_back(buf[i].second);
}

}  // namespace detail

/// Draws a uniform L-subset of servers and returns the k shortest among
/// them, ties broken uniformly at random.
inline std::vector<int> route_targets(const QueueVector& q,
                                      const SystemParams& params,
                                      SplitMix64& rng) {
  params.validate_for_sim();
  if (q.n() != params.n) {
    throw std::invalid_argument("route_targets: queue vector size != n");
  }
  std::vector<int> chosen;
  sample_subset(rng, params.n, params.L, chosen);
  std::vector<std::pair<std::uint64_t, int>> buf;
  detail::pick_k_shortest(q.lengths, chosen, params.k, rng, buf);
  return chosen;
}

/// Advances the chain by one event.  Arrivals fire at total rate n*lambda
/// and add one job to each routed target (a target at the cap is left
/// unchanged); services fire at rate k per busy server and remove one job
/// from a uniformly chosen busy server.
inline QueueEvent advance_event(QueueVector& q, const SystemParams& params,
                                int cap, SplitMix64& rng) {
  params.validate_for_sim();
  int busy = 0;
  for (int len : q.lengths) busy += len > 0 ? 1 : 0;

  const double arrival_rate = params.n * params.lambda;
  const double service_rate = static_cast<double>(params.k) * busy;
  const double total = arrival_rate + service_rate;
  if (!(total > 0.0)) {
    throw std::runtime_error("advance_event: no event possible (empty system "
                             "with zero arrival rate)");
  }

  QueueEvent ev;
  ev.dt = exponential(rng, total);
  if (uniform_double(rng) * total < service_rate) {
    ev.kind = EventKind::kService;
    // uniform among busy servers
    auto idx = static_cast<int>(uniform_below(rng, busy));
    for (int s = 0; s < q.n(); ++s) {
      if (q.lengths[s] > 0 && idx-- == 0) {
        ev.changes.emplace_back(s, q.lengths[s]);
        q.lengths[s] -= 1;
        break;
      }
    }
  } else {
    ev.kind = EventKind::kArrival;
    std::vector<int> chosen;
    sample_subset(rng, params.n, params.L, chosen);
    for (int s : chosen) ev.sampled_lengths.push_back(q.lengths[s]);
    std::sort(ev.sampled_lengths.begin(), ev.sampled_lengths.end());
    std::vector<std::pair<std::uint64_t, int>> buf;
    detail::pick_k_shortest(q.lengths, chosen, params.k, rng, buf);
    for (int s : chosen) {
      if (cap > 0 && q.lengths[s] >= cap) continue;
      ev.changes.emplace_back(s, q.lengths[s]);
      q.lengths[s] += 1;
    }
  }
  return ev;
}

/// Occupancy of a queue vector: pmf over lengths 0..M (mass beyond M folded
/// into M) and its tail.
inline std::pair<OccupancyPmf, OccupancyTail> occupancy_from_queues(
    const QueueVector& q, int M) {
  if (M < 1) throw std::invalid_argument("occupancy_from_queues: M >= 1");
  q.validate();
  std::vector<double> pmf(static_cast<std::size_t>(M) + 1, 0.0);
  const double inv_n = 1.0 / q.n();
  for (int len : q.lengths) {
    pmf[std::min(len, M)] += inv_n;
  }
  OccupancyPmf r(std::move(pmf));
  return {r, iota(r)};
}

namespace detail {

// Event-driven engine with incremental occupancy counters: tail_count[i]
// holds the number of servers with length >= i, the busy list supports O(1)
// uniform service picks, and each event touches O(L log L) state.
class SimEngine {
 public:
  SimEngine(const SystemParams& params, int cap, std::uint64_t seed)
      : p_(params),
        cap_(cap),
        rng_(seed),
        len_(params.n, 0),
        busy_pos_(params.n, -1),
        tail_count_(kMaxTrackedLen + 2, 0) {}

  double time = 0.0;

  int busy() const { return static_cast<int>(busy_list_.size()); }
  int max_len() const { return max_len_; }
  long long tail_count(int i) const { return tail_count_[i]; }
  const std::vector<int>& lengths() const { return len_; }

  double arrival_rate() const { return p_.n * p_.lambda; }
  double service_rate() const {
    return static_cast<double>(p_.k) * busy();
  }

  // Compares the incrementally maintained tail counters against a recount
  // from the raw queue lengths.
  long long recount_mismatches() const {
    std::vector<long long> fresh(tail_count_.size(), 0);
    for (int len : len_) {
      for (int i = 1; i <= len; ++i) fresh[i] += 1;
    }
    long long bad = 0;
    for (std::size_t i = 1; i < tail_count_.size(); ++i) {
      if (fresh[i] != tail_count_[i]) bad += 1;
    }
    if (busy() != fresh[1]) bad += 1;
    return bad;
  }

  // Advances one event; returns the holding time that elapsed before it.
  double step(AuditStats* audit) {
    const double a = arrival_rate();
    const double s = service_rate();
    const double total = a + s;
    const double dt = exponential(rng_, total);
    time += dt;

    if (audit) {
      const double p_service = s / total;
      audit->expected_services += p_service;
      audit->expected_service_var += p_service * (1.0 - p_service);
    }

    if (uniform_double(rng_) * total < s) {
      if (audit) audit->services += 1;
      const auto idx = static_cast<int>(uniform_below(rng_, busy()));
      decrement(busy_list_[idx]);
    } else {
      if (audit) audit->arrivals += 1;
      sample_subset(rng_, p_.n, p_.L, chosen_);
      if (audit) {
        audit_lengths_.clear();
        for (int srv : chosen_) audit_lengths_.push_back(len_[srv]);
        std::sort(audit_lengths_.begin(), audit_lengths_.end());
      }
      pick_k_shortest(len_, chosen_, p_.k, rng_, sort_buf_);
      if (audit) {
        // The applied jump must match the k smallest of the sampled
        // pre-jump configuration.
        target_lengths_.clear();
        for (int srv : chosen_) target_lengths_.push_back(len_[srv]);
        std::sort(target_lengths_.begin(), target_lengths_.end());
        for (int i = 0; i < p_.k; ++i) {
          if (target_lengths_[i] != audit_lengths_[i]) {
            audit->jump_mismatches += 1;
            break;
          }
        }
      }
      for (int srv : chosen_) {
        if (cap_ > 0 && len_[srv] >= cap_) continue;
        increment(srv);
      }
    }
    return dt;
  }

 private:
  void increment(int srv) {
    const int old = len_[srv];
    if (old + 1 > kMaxTrackedLen) {
      throw std::runtime_error("simulation: queue length exceeded the "
                               "tracked maximum of " +
                               std::to_string(kMaxTrackedLen));
    }
    len_[srv] = old + 1;
    tail_count_[old + 1] += 1;
    max_len_ = std::max(max_len_, old + 1);
    if (old == 0) {
      busy_pos_[srv] = static_cast<int>(busy_list_.size());
      busy_list_.push_back(srv);
    }
  }

  void decrement(int srv) {
    const int old = len_[srv];
    len_[srv] = old - 1;
    tail_count_[old] -= 1;
    while (max_len_ > 0 && tail_count_[max_len_] == 0) --max_len_;
    if (old == 1) {
      // swap-pop from the busy list
      const int pos = busy_pos_[srv];
      const int last = busy_list_.back();
      busy_list_[pos] = last;
      busy_pos_[last] = pos;
      busy_list_.pop_back();
      busy_pos_[srv] = -1;
    }
  }

  const SystemParams p_;
  int cap_;
  SplitMix64 rng_;
  std::vector<int> len_;
  std::vector<int> busy_list_;
  std::vector<int> busy_pos_;
  std::vector<long long> tail_count_;
  int max_len_ = 0;
  std::vector<int> chosen_;
  std::vector<int> audit_lengths_;
  std::vector<int> target_lengths_;
  std::vector<std::pair<std::uint64_t, int>> sort_buf_;
};

}  // namespace detail

/// Runs the chain from an empty system through warmup_time, then
/// accumulates the time-weighted occupancy average over measure_time.
/// Deterministic for a fixed seed.  Optionally records a thinned
/// trajectory and audit counters.
inline SteadyEstimate simulate_steady(const SimConfig& config,
                                      std::vector<TrajectorySample>* trajectory,
                                      AuditStats* audit) {
  config.validate();
  detail::SimEngine engine(config.params, config.cap, config.seed);
  const int n = config.params.n;
  const double t_start = config.warmup_time;
  const double t_end = config.warmup_time + config.measure_time;
  const double batch_len = config.measure_time / kBatchCount;

  // acc[b][i] accumulates the occupied time of tail level i in batch b.
  std::vector<std::vector<double>> acc(
      kBatchCount, std::vector<double>(kMaxTrackedLen + 1, 0.0));
  long long events_measured = 0;
  double next_record = t_start;
  std::array<double, kMaxTrackedLen + 1> snapshot;

  while (engine.time < t_end) {
    const double t0 = engine.time;
    // The state is constant on [t0, engine.time) once the step is taken;
    // snapshot the pre-jump counts for accumulation and recording.
    const int max_i = engine.max_len();
    for (int i = 1; i <= max_i; ++i) {
      snapshot[i] = static_cast<double>(engine.tail_count(i));
    }
    engine.step(audit);

    double lo = std::max(t0, t_start);
    const double hi = std::min(engine.time, t_end);
    while (lo < hi) {
      int b = static_cast<int>((lo - t_start) / batch_len);
      if (t_start + (b + 1) * batch_len <= lo) b += 1;  // boundary rounding
      b = std::min(b, kBatchCount - 1);
      const double seg_end = std::min(hi, t_start + (b + 1) * batch_len);
      const double w = (seg_end - lo) / n;
      for (int i = 1; i <= max_i; ++i) acc[b][i] += snapshot[i] * w;
      lo = seg_end;
    }

    if (trajectory && config.thinning > 0.0) {
      while (next_record < engine.time && next_record < t_end) {
        std::vector<double> u(static_cast<std::size_t>(max_i) + 1);
        u[0] = 1.0;
        for (int i = 1; i <= max_i; ++i) u[i] = snapshot[i] / n;
        trajectory->push_back({next_record - t_start,
                               OccupancyTail(std::move(u))});
        next_record += config.thinning;
      }
    }
    if (engine.time > t_start && engine.time <= t_end) events_measured += 1;
  }
  if (audit) audit->counter_mismatches = engine.recount_mismatches();

  SteadyEstimate est;
  est.measure_time = config.measure_time;
  est.total_events = events_measured;
  std::vector<double> u(kMaxTrackedLen + 1, 0.0);
  est.std_err.assign(kMaxTrackedLen + 1, 0.0);
  u[0] = 1.0;
  for (int i = 1; i <= kMaxTrackedLen; ++i) {
    double mean = 0.0;
    for (int b = 0; b < kBatchCount; ++b) mean += acc[b][i];
    mean /= config.measure_time;
    u[i] = mean;
    double ss = 0.0;
    for (int b = 0; b < kBatchCount; ++b) {
      const double x = acc[b][i] / batch_len;
      ss += (x - mean) * (x - mean);
    }
    est.std_err[i] = std::sqrt(ss / (kBatchCount * (kBatchCount - 1.0)));
  }
  est.u_hat = OccupancyTail(std::move(u));
  return est;
}

inline SteadyEstimate simulate_steady(const SimConfig& config) {
  return simulate_steady(config, nullptr, nullptr);
}

}  // namespace mdslb
