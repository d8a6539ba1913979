#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wsac/types.hpp"

namespace wsac {

/// Numerical tolerances used by the tabular machinery. Each default is the
/// contract value; callers may tighten or loosen them per instance.
struct Tolerances {
  double distribution = 1e-12;  // row sums of P, rho, policies
  double fixed_point = 1e-9;    // Bellman / flow identities
  double occupancy_sum = 1e-9;  // total mass of an occupancy table
  double support = 1e-12;       // entries at or below this count as zero mass
};

struct CmdpMetadata {
  std::optional<std::uint64_t> seed;
  std::string generator;
  /// Cost budget folded into the stored cost table (C = c_raw - kappa).
  std::optional<double> kappa;
};

/// Finite constrained MDP (S, A, P, R, C, gamma, rho). The constraint is
/// J_c(pi) <= 0; any budget has already been subtracted from C.
class Cmdp {
 public:
  Cmdp(Matrix transition, Matrix reward, Matrix cost, double gamma, Vector initial_dist,
       CmdpMetadata metadata = {}, const Tolerances& tol = {});

  /// Builds a model from a raw per-step cost and a normalized budget kappa,
  /// storing C = c_raw - kappa so that J_c <= 0 encodes J_c_raw <= kappa.
  static Cmdp with_cost_budget(Matrix transition, Matrix reward, const Matrix& raw_cost,
                               double kappa, double gamma, Vector initial_dist,
                               CmdpMetadata metadata = {});

  Index n_states() const { return n_states_; }
  Index n_actions() const { return n_actions_; }
  const Matrix& transition() const { return transition_; }
  const Matrix& reward() const { return reward_; }
  const Matrix& cost() const { return cost_; }
  const Matrix& signal(Signal kind) const { return kind == Signal::kReward ? reward_ : cost_; }
  double gamma() const { return gamma_; }
  const Vector& initial_dist() const { return initial_dist_; }
  const CmdpMetadata& metadata() const { return metadata_; }
  double v_max() const { return 1.0 / (1.0 - gamma_); }

  /// P(.|s,a) as a row vector.
  auto next_state_dist(Index s, Index a) const {
    return transition_.row(sa_index(s, a, n_actions_));
  }

 private:
  Index n_states_;
  Index n_actions_;
  Matrix transition_;
  Matrix reward_;
  Matrix cost_;
  double gamma_;
  Vector initial_dist_;
  CmdpMetadata metadata_;
};

/// Stationary stochastic policy; row s holds pi(.|s).
class Policy {
 public:
  explicit Policy(Matrix probs, double tol = Tolerances{}.distribution);

  static Policy uniform(Index n_states, Index n_actions);
  static Policy deterministic(const std::vector<Index>& actions, Index n_actions);

  const Matrix& probs() const { return probs_; }
  Index n_states() const { return probs_.rows(); }
  Index n_actions() const { return probs_.cols(); }
  double operator()(Index s, Index a) const { return probs_(s, a); }

  friend bool operator==(const Policy& lhs, const Policy& rhs) { return lhs.probs_ == rhs.probs_; }

 private:
  Matrix probs_;
};

/// Uniform per-episode mixture over a list of policies.
class MixturePolicy {
 public:
  explicit MixturePolicy(std::vector<Policy> members);

  const std::vector<Policy>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  double weight() const { return 1.0 / static_cast<double>(members_.size()); }
  /// Per-state average of the member action distributions. This is NOT the
  /// policy whose value equals the mixture's value.
  Matrix average_probs() const;

 private:
  std::vector<Policy> members_;
};

struct ValueBundle {
  Vector v_r;
  Vector v_c;
  Matrix q_r;
  Matrix q_c;
  double j_r = 0.0;
  double j_c = 0.0;
};

/// Normalized discounted state-action occupancy d^pi.
struct Occupancy {
  Matrix d;

  Index n_states() const { return d.rows(); }
  Index n_actions() const { return d.cols(); }
  /// Marginal over actions.
  Vector state_marginal() const { return d.rowwise().sum(); }
};

void check_dims(const Cmdp& cmdp, const Policy& policy);

/// P^pi(s, s') = sum_a pi(a|s) P(s'|s,a).
Matrix policy_transition(const Cmdp& cmdp, const Policy& policy);

/// f(s, pi) = sum_a pi(a|s) f(s,a).
inline Vector state_average(const Matrix& f, const Matrix& probs) {
  return f.cwiseProduct(probs).rowwise().sum();
}

ValueBundle policy_eval(const Cmdp& cmdp, const Policy& policy);
Occupancy occupancy(const Cmdp& cmdp, const Policy& policy, const Tolerances& tol = {});
ValueBundle mixture_eval(const Cmdp& cmdp, const MixturePolicy& mix);

/// (T^pi f)(s,a) = signal(s,a) + gamma * E_{s'~P(.|s,a)} f(s', pi). Not clipped.
Matrix bellman_apply(const Cmdp& cmdp, const Policy& policy, const Matrix& f, Signal kind);

/// w(s,a) = d_target(s,a) / d_behavior(s,a); zero where both vanish.
Matrix importance_weights(const Occupancy& target, const Occupancy& behavior,
                          const Tolerances& tol = {});

/// ||w||_{2,mu} for w = d_target / d_behavior.
double concentrability(const Occupancy& target, const Occupancy& behavior,
                       const Tolerances& tol = {});

/// Maximizes J_r subject to J_c <= 0 through the occupancy-measure LP.
/// Throws InfeasibleError carrying min_pi J_c when the budget cannot be met.
Policy solve_optimal_safe(const Cmdp& cmdp);

/// Minimum achievable J_c over all policies.
double min_cost(const Cmdp& cmdp);

/// Optimal J for the given signal by value iteration (maximize or minimize),
/// ignoring the constraint. Used for reward normalization bounds.
double optimal_unconstrained_j(const Cmdp& cmdp, Signal kind, bool maximize,
                               double tol = 1e-12, int max_iters = 100000);

/// Policy from an occupancy table: pi(a|s) = d(s,a)/sum_a d(s,a), uniform at
/// zero-mass states.
Policy policy_from_occupancy(const Matrix& d, double zero_tol = 1e-14);

}  // namespace wsac
