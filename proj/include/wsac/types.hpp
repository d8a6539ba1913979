#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace wsac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Tables indexed (s, a) are stored as n_states x n_actions matrices.
/// Transition tensors P(s'|s,a) are stored as (n_states*n_actions) x n_states
/// matrices with row index s*n_actions + a.
inline Index sa_index(Index s, Index a, Index n_actions) { return s * n_actions + a; }

/// Raised when inputs disagree in shape or violate a documented invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a target distribution puts mass where the behavior has none.
class CoverageError : public std::runtime_error {
 public:
  CoverageError(const std::string& what, Index s, Index a)
      : std::runtime_error(what), state(s), action(a) {}
  Index state;
  Index action;
};

/// Raised by the constrained solver when no policy satisfies J_c <= 0.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double min_cost)
      : std::runtime_error(what), min_achievable_cost(min_cost) {}
  double min_achievable_cost;
};

/// Raised when an optimizer produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Signal { kReward, kCost };

}  // namespace wsac
