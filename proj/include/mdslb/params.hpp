#pragma once

#include <stdexcept>
#include <string>

#include "mdslb/combinatorics.hpp"

namespace mdslb {

/// Cluster parameters.  Every file is striped over L servers and any k of
/// the pieces reconstruct it; requests are routed to the k shortest of the
/// L queues holding the requested file.  Arrivals come at rate lambda per
/// server, services at rate k per busy server.
struct SystemParams {
  int n = 0;           // server count (used by the simulator only)
  double lambda = 0.0; // per-server arrival rate
  int L = 0;           // spread factor
  int k = 0;           // reconstruction count

  /// Checks 0 < lambda < 1 and 1 <= k < L <= 20.
  void validate() const {
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw std::invalid_argument(
          "SystemParams: require 0 < lambda < 1, got lambda=" +
          std::to_string(lambda));
    }
    if (!(1 <= k && k < L)) {
      throw std::invalid_argument("SystemParams: require 1 <= k < L, got k=" +
                                  std::to_string(k) + ", L=" +
                                  std::to_string(L));
    }
    if (L > kMaxSpread) {
      throw std::invalid_argument("SystemParams: require L <= 20, got L=" +
                                  std::to_string(L));
    }
  }

  /// Simulator entry points additionally need L <= n.
  void validate_for_sim() const {
    validate();
    if (n < L) {
      throw std::invalid_argument("SystemParams: require L <= n, got n=" +
                                  std::to_string(n) + ", L=" +
                                  std::to_string(L));
    }
  }
};

}  // namespace mdslb
