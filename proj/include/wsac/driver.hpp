#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wsac/cmdp.hpp"
#include "wsac/critics.hpp"
#include "wsac/dataset.hpp"
#include "wsac/oracle.hpp"

namespace wsac {

enum class RunMode { kEmpirical, kExact };

/// Actor update used by the main loop. kGreedy replaces the exponentiated-weights
/// oracle with a per-state argmax of the payoff (ablation only).
enum class ActorUpdate { kExponentiatedWeights, kGreedy };

/// kAggressionLimited: f_r - lambda {f_c - f_c(s, pi_ref)}_+.
/// kLagrangian: f_r - lambda f_c (ablation only).
enum class PayoffRule { kAggressionLimited, kLagrangian };

/// Nondecreasing lambda schedule: lambda_k = lo + (hi - lo) * k / K for k = 1..K.
struct LambdaSchedule {
  double lo = 0.0;
  double hi = 2.0;
};

struct WsacConfig {
  double beta = 2.0;
  double lambda = 2.0;
  std::optional<LambdaSchedule> lambda_schedule;
  int k = 100;
  std::optional<double> eta;
  WeightClass weight_class = WeightClass::box(1.0);
  CriticSolverCfg critic_cfg;
  /// Start each critic solve from the previous iteration's table.
  bool warm_start_critics = true;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::kEmpirical;
  ActorUpdate actor = ActorUpdate::kExponentiatedWeights;
  PayoffRule payoff_rule = PayoffRule::kAggressionLimited;

  void validate() const;
  /// lambda used at iteration k (1-based).
  double lambda_at(int k) const;
  double eta_for(Index n_actions, double v_max) const;
};

struct IterationRecord {
  int k = 0;
  double lambda = 0.0;
  double critic_objective_r = 0.0;
  double critic_objective_c = 0.0;
  double loss_l_r = 0.0;
  double loss_l_c = 0.0;
  double bellman_err_r = 0.0;
  double bellman_err_c = 0.0;
  double payoff_min = 0.0;
  double payoff_max = 0.0;
  /// Same losses under the exact behavior measure, when one was supplied.
  std::optional<double> exact_loss_l_r;
  std::optional<double> exact_bellman_err_r;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  /// Critic tables and payoffs per iteration, kept for regret audits.
  std::vector<QTable> reward_critics;
  std::vector<QTable> cost_critics;
  std::vector<PayoffTable> payoffs;
  /// Non-empty when pi_ref's occupancy escapes the behavior support (exact mode).
  std::string coverage_warning;
};

struct WsacResult {
  MixturePolicy policy;
  RunTrace trace;
};

/// Runs K rounds of: reward critic, cost critic, payoff, oracle update.
/// The output mixes the iterates pi_1..pi_K that entered each round.
WsacResult run_wsac(const Dataset& dataset, const Policy& pi_ref, const WsacConfig& cfg,
                    const BellmanMoments* exact_diagnostics = nullptr);

/// Same loop with every data expectation replaced by the exact expectation
/// under mu = d^behavior.
WsacResult run_wsac_exact(const Cmdp& cmdp, const Policy& behavior, const Policy& pi_ref,
                          const WsacConfig& cfg);

/// Shared loop on precomputed moments.
WsacResult run_wsac_on_moments(const BellmanMoments& moments, const Policy& pi_ref,
                               const WsacConfig& cfg, const BellmanMoments* exact_diagnostics = nullptr);

/// CSV with columns k,crit_obj_r,crit_obj_c,L_r,L_c,E_r,E_c,payoff_min,payoff_max.
void write_trace_csv(const RunTrace& trace, std::ostream& out);

}  // namespace wsac
