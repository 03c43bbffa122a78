#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdslb/combinatorics.hpp"
#include "mdslb/errors.hpp"
#include "mdslb/occupancy.hpp"
#include "mdslb/params.hpp"

namespace mdslb {

// Largest capped state space the exact solver accepts: (B+1)^n states.
inline constexpr long long kMaxOracleStates = 200000;

/// Stationary law of the capped chain and its expected occupancy tail.
struct StationaryOracleResult {
  OccupancyTail expected_u;        // E[u], indices 0..B
  std::vector<double> state_probs; // indexed by encoded queue vector
  std::vector<double> event_rates; // n*lambda + k*#busy per state
};

namespace detail {

// Enumerates every c-subset of {0..m-1} and invokes fn on each.
template <typename Fn>
void for_each_combination(int m, int c, Fn&& fn) {
  std::vector<int> idx(c);
  for (int i = 0; i < c; ++i) idx[i] = i;
  if (c == 0) {
    fn(idx);
    return;
  }
  while (true) {
    fn(idx);
    int i = c - 1;
    while (i >= 0 && idx[i] == m - c + i) --i;
    if (i < 0) break;
    idx[i] += 1;
    for (int j = i + 1; j < c; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

/// Builds the exact generator of the capped n-server chain (arrival rate
/// n*lambda split uniformly over L-subsets, ties split uniformly over tied
/// k-subsets, services at rate k per busy server, arrivals to a full queue
/// dropped for that target only), solves the stationary balance equations,
/// and returns E[u] under the stationary law.
inline StationaryOracleResult exact_stationary_capped(
    const SystemParams& params, int B) {
  params.validate_for_sim();
  if (B < 1) {
    throw std::invalid_argument("exact_stationary_capped: cap B must be >= 1");
  }
  const int n = params.n;
  const int L = params.L;
  const int k = params.k;

  long long states = 1;
  for (int i = 0; i < n; ++i) {
    states *= B + 1;
    if (states > kMaxOracleStates) {
      throw StateSpaceLimitError(
          "exact_stationary_capped: (B+1)^n exceeds " +
          std::to_string(kMaxOracleStates) + " states");
    }
  }

  // Mixed-radix encoding: state = sum_i q_i (B+1)^i.
  std::vector<long long> stride(n);
  stride[0] = 1;
  for (int i = 1; i < n; ++i) stride[i] = stride[i - 1] * (B + 1);
  std::vector<int> q(n);
  auto decode = [&](long long s) {
    for (int i = 0; i < n; ++i) {
      q[i] = static_cast<int>(s / stride[i] % (B + 1));
    }
  };

  // All L-subsets of servers, fixed once.
  std::vector<std::vector<int>> subsets;
  detail::for_each_combination(n, L, [&](const std::vector<int>& c) {
    subsets.push_back(c);
  });
  const double per_subset_rate =
      params.lambda * n / static_cast<double>(subsets.size());

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> triplets;
  std::vector<double> event_rates(states, 0.0);

  // Row 0 of the balance system is replaced by the normalization row, so
  // generator entries landing in that row are dropped.  A jump back to the
  // same state (every target capped) does not move the chain.
  auto add_flow = [&](long long from, long long to, double rate) {
    if (to == from) return;
    if (to != 0) {
      triplets.emplace_back(static_cast<int>(to), static_cast<int>(from),
                            rate);
    }
    if (from != 0) {
      triplets.emplace_back(static_cast<int>(from), static_cast<int>(from),
                            -rate);
    }
  };

  std::vector<int> sub_lengths;
  for (long long s = 0; s < states; ++s) {
    decode(s);
    int busy = 0;
    for (int i = 0; i < n; ++i) busy += q[i] > 0 ? 1 : 0;
    event_rates[s] = params.lambda * n + static_cast<double>(k) * busy;

    // services
    for (int i = 0; i < n; ++i) {
      if (q[i] > 0) add_flow(s, s - stride[i], k);
    }

    // arrivals: for each subset, the k shortest receive a piece; ties are
    // spread uniformly over the tied choices
    for (const std::vector<int>& sub : subsets) {
      sub_lengths.clear();
      for (int i : sub) sub_lengths.push_back(q[i]);
      std::sort(sub_lengths.begin(), sub_lengths.end());
      const int threshold = sub_lengths[k - 1];
      int definite = 0;  // strictly below the threshold: always targeted
      std::vector<int> tied;
      for (int i : sub) {
        if (q[i] < threshold) {
          definite += 1;
        } else if (q[i] == threshold) {
          tied.push_back(i);
        }
      }
      const int need = k - definite;
      long long base = s;
      for (int i : sub) {
        if (q[i] < threshold) base += stride[i];  // below threshold => below B
      }
      const double choices = binomial(static_cast<int>(tied.size()), need);
      const double rate = per_subset_rate / choices;
      detail::for_each_combination(
          static_cast<int>(tied.size()), need, [&](const std::vector<int>& c) {
            long long to = base;
            for (int j : c) {
              if (q[tied[j]] < B) to += stride[tied[j]];
            }
            add_flow(s, to, rate);
          });
    }
  }

  // Balance equations Q^T pi = 0 with row 0 replaced by sum(pi) = 1.
  for (long long s = 0; s < states; ++s) {
    triplets.emplace_back(0, static_cast<int>(s), 1.0);
  }
  Eigen::SparseMatrix<double> A(static_cast<int>(states),
                                static_cast<int>(states));
  A.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(states);
  b[0] = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success) {
    throw SingularMatrixError(
        "exact_stationary_capped: balance equations are singular");
  }
  Eigen::VectorXd pi = solver.solve(b);
  if (solver.info() != Eigen::Success) {
    throw SingularMatrixError("exact_stationary_capped: solve failed");
  }

  StationaryOracleResult out;
  out.state_probs.assign(pi.data(), pi.data() + states);
  out.event_rates = std::move(event_rates);
  std::vector<double> eu(static_cast<std::size_t>(B) + 1, 0.0);
  for (long long s = 0; s < states; ++s) {
    decode(s);
    for (int i = 0; i < n; ++i) {
      for (int lvl = 1; lvl <= q[i]; ++lvl) {
        eu[lvl] += out.state_probs[s] / n;
      }
    }
  }
  eu[0] = 1.0;
  out.expected_u = OccupancyTail(std::move(eu));
  out.expected_u.validate();
  return out;
}

}  // namespace mdslb
