#pragma once

#include <cstdint>
#include <vector>

#include "wsac/cmdp.hpp"

namespace wsac {

struct Transition {
  Index s = 0;
  Index a = 0;
  double r = 0.0;
  double c = 0.0;
  Index s_next = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Offline dataset of i.i.d. transitions plus its (s,a) visit counts.
class Dataset {
 public:
  Dataset(std::vector<Transition> transitions, Index n_states, Index n_actions, double gamma,
          std::uint64_t source_seed);

  const std::vector<Transition>& transitions() const { return transitions_; }
  /// n(s,a) as an n_states x n_actions table.
  const Matrix& counts() const { return counts_; }
  std::size_t size() const { return transitions_.size(); }
  Index n_states() const { return n_states_; }
  Index n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  std::uint64_t source_seed() const { return source_seed_; }

  friend bool operator==(const Dataset& lhs, const Dataset& rhs) {
    return lhs.transitions_ == rhs.transitions_ && lhs.n_states_ == rhs.n_states_ &&
           lhs.n_actions_ == rhs.n_actions_ && lhs.gamma_ == rhs.gamma_ &&
           lhs.source_seed_ == rhs.source_seed_;
  }

 private:
  std::vector<Transition> transitions_;
  Matrix counts_;
  Index n_states_;
  Index n_actions_;
  double gamma_;
  std::uint64_t source_seed_;
};

/// Draws n i.i.d. transitions: (s,a) ~ d^behavior (computed exactly),
/// r = R(s,a), c = C(s,a), s' ~ P(.|s,a). Deterministic given seed.
Dataset sample_dataset(const Cmdp& cmdp, const Policy& behavior, std::size_t n, std::uint64_t seed);

/// pi(a|s) = n(s,a)/n(s) on observed states, uniform elsewhere.
Policy behavior_clone(const Dataset& dataset, Index n_states, Index n_actions);

/// Per-state blend p * optimal + (1 - p) * base.
Policy mixture_behavior(const Policy& optimal, const Policy& base, double p);

}  // namespace wsac
