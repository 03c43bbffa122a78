#pragma once

#include <stdexcept>
#include <string>

namespace mdslb {

/// Fixed-step integration produced a state outside the admissible set
/// (coordinates beyond [0,1] or ordering broken past tolerance).
class StepInstabilityError : public std::runtime_error {
 public:
  explicit StepInstabilityError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Two trajectories were compared on different time grids or truncations.
class GridMismatchError : public std::runtime_error {
 public:
  explicit GridMismatchError(const std::string& what)
      : std::runtime_error(what) {}
};

/// The capped state space is too large for the exact solver.
class StateSpaceLimitError : public std::runtime_error {
 public:
  explicit StateSpaceLimitError(const std::string& what)
      : std::runtime_error(what) {}
};

/// The stationary balance equations could not be solved.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace mdslb
