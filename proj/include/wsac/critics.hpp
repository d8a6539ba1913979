#pragma once

#include <optional>
#include <vector>

#include "wsac/cmdp.hpp"
#include "wsac/dataset.hpp"

namespace wsac {

/// Bounded state-action table. Reward critics live in [0, V_max], cost
/// critics in [-V_max, V_max].
class QTable {
 public:
  QTable(Matrix values, double lower, double upper);

  static QTable reward_critic(Matrix values, double v_max) { return {std::move(values), 0.0, v_max}; }
  static QTable cost_critic(Matrix values, double v_max) { return {std::move(values), -v_max, v_max}; }

  const Matrix& values() const { return values_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double operator()(Index s, Index a) const { return values_(s, a); }

 private:
  Matrix values_;
  double lower_;
  double upper_;
};

/// Weight class W for the weighted Bellman error.
///  - Box: all w: S x A -> [0, b_w]; the inner max has a closed form.
///  - TwoPoint: W = {0, c_inf}, reducing the error to c_inf * E[residual^2].
struct WeightClass {
  enum class Kind { kBox, kTwoPoint };
  Kind kind = Kind::kBox;
  double bound = 1.0;

  static WeightClass box(double b_w);
  static WeightClass two_point(double c_inf);
};

enum class CriticInit { kZero, kMidpoint };
enum class StepRule { kDiminishing, kAdaptive };

struct CriticSolverCfg {
  int max_iters = 2000;
  /// Base step; <= 0 means "use V_max".
  double step_size = 0.0;
  /// Early exit when the projected subgradient has norm <= tol; <= 0 means 1e-4 * V_max.
  double tol = 0.0;
  CriticInit init = CriticInit::kZero;
  /// kDiminishing: step_size / sqrt(t). kAdaptive: per-entry step_size / sqrt(sum of squared
  /// subgradients), i.e. diagonal AdaGrad on the same projected-subgradient scheme.
  StepRule step_rule = StepRule::kDiminishing;
  /// Evaluate the averaged iterate every this many steps.
  int average_eval_every = 10;

  void validate() const;
};

/// Sufficient statistics of a transition distribution for the critic losses.
/// Entry (s,a) / row s*A+a holds expectations scaled by the (s,a) mass, so
/// empirical data and an exact population measure share one code path.
struct BellmanMoments {
  Index n_states = 0;
  Index n_actions = 0;
  double gamma = 0.0;
  /// mu(s,a).
  Matrix mass;
  /// mu(s,a) P(s'|s,a), shape (S*A) x S.
  Matrix next_mass;
  /// E[signal * 1{s,a,s'}], per signal (0 reward, 1 cost); shape (S*A) x S.
  Matrix first[2];
  /// E[signal^2 * 1{s,a,s'}].
  Matrix second[2];
  /// Number of samples, or 0 for an exact population measure.
  std::size_t n_samples = 0;

  const Matrix& first_of(Signal kind) const { return first[kind == Signal::kReward ? 0 : 1]; }
  const Matrix& second_of(Signal kind) const { return second[kind == Signal::kReward ? 0 : 1]; }
};

BellmanMoments empirical_moments(const Dataset& dataset);
/// Population moments under (s,a) ~ behavior_occ, s' ~ P(.|s,a).
BellmanMoments exact_moments(const Cmdp& cmdp, const Occupancy& behavior_occ);

/// L(pi, f) = E[f(s, pi) - f(s, a)].
double loss_l(const BellmanMoments& moments, const Policy& policy, const Matrix& f);
double loss_l(const Dataset& dataset, const Policy& policy, const QTable& f);

/// max_{w in W} |E[w(s,a) (f(s,a) - signal - gamma f(s', pi))]|.
double weighted_bellman_error(const BellmanMoments& moments, const Policy& policy, const Matrix& f,
                              const WeightClass& wc, Signal kind);
double weighted_bellman_error(const Dataset& dataset, const Policy& policy, const QTable& f,
                              const WeightClass& wc, Signal kind);

/// Mass-weighted mean residual E[(f(s,a) - signal - gamma f(s',pi)) 1{s,a}] per (s,a).
Matrix weighted_residuals(const BellmanMoments& moments, const Policy& policy, const Matrix& f,
                          Signal kind);

/// Objective  loss_coef * L(pi, f) + beta * E_W(pi, f)  over a box of tables.
class CriticObjective {
 public:
  CriticObjective(const BellmanMoments& moments, const Policy& policy, Signal kind, double loss_coef,
                  double beta, const WeightClass& wc);

  double value(const Matrix& f) const;
  /// Returns the objective and writes a subgradient into grad.
  double value_and_subgradient(const Matrix& f, Matrix& grad) const;

  double loss_part(const Matrix& f) const;
  double error_part(const Matrix& f) const;

 private:
  const BellmanMoments& moments_;
  const Policy& policy_;
  Signal kind_;
  double loss_coef_;
  double beta_;
  WeightClass wc_;
  Vector state_mass_;
  Vector first_sum_;
};

struct CriticSolution {
  QTable table;
  double objective = 0.0;
  double loss = 0.0;
  double bellman_error = 0.0;
  int iterations = 0;
  /// Best objective found up to each iteration (non-increasing).
  std::vector<double> trace;
};

/// argmin over [0,V_max]^{SxA} of L(pi,f) + beta E(pi,f).
CriticSolution critic_solve_reward(const BellmanMoments& moments, const Policy& policy, double beta,
                                   const WeightClass& wc, const CriticSolverCfg& cfg,
                                   const std::optional<Matrix>& warm_start = std::nullopt);
CriticSolution critic_solve_reward(const Dataset& dataset, const Policy& policy, double beta,
                                   const WeightClass& wc, const CriticSolverCfg& cfg);

/// argmin over [-V_max,V_max]^{SxA} of -lambda L(pi,f) + beta E_cost(pi,f).
CriticSolution critic_solve_cost(const BellmanMoments& moments, const Policy& policy, double lambda,
                                 double beta, const WeightClass& wc, const CriticSolverCfg& cfg,
                                 const std::optional<Matrix>& warm_start = std::nullopt);
CriticSolution critic_solve_cost(const Dataset& dataset, const Policy& policy, double lambda,
                                 double beta, const WeightClass& wc, const CriticSolverCfg& cfg);

}  // namespace wsac
