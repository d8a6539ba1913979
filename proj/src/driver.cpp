#include "wsac/driver.hpp"

#include <cmath>
#include <ostream>

namespace wsac {

void WsacConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("WsacConfig: beta must be >= 0");
  if (!lambda_schedule && (!(lambda > 0.0) || !std::isfinite(lambda))) {
    throw ConfigError("WsacConfig: lambda must be > 0");
  }
  if (lambda_schedule) {
    const auto& sch = *lambda_schedule;
    if (!(sch.lo >= 0.0) || !(sch.hi >= sch.lo) || !(sch.hi > 0.0) || !std::isfinite(sch.hi)) {
      throw ConfigError("WsacConfig: lambda schedule needs 0 <= lo <= hi, hi > 0");
    }
  }
  if (k < 1) throw ConfigError("WsacConfig: K must be >= 1");
  if (eta && (!(*eta > 0.0) || !std::isfinite(*eta))) throw ConfigError("WsacConfig: eta must be > 0");
  if (weight_class.kind == WeightClass::Kind::kBox && weight_class.bound < 1.0) {
    // W must contain the all-one function.
    throw ConfigError("WsacConfig: Box weight bound b_w must be >= 1");
  }
  critic_cfg.validate();
}

double WsacConfig::lambda_at(int iteration) const {
  if (!lambda_schedule) return lambda;
  const auto& sch = *lambda_schedule;
  return sch.lo + (sch.hi - sch.lo) * static_cast<double>(iteration) / static_cast<double>(k);
}

double WsacConfig::eta_for(Index n_actions, double v_max) const {
  if (eta) return *eta;
  if (n_actions == 1) return 1.0;
  return default_eta(n_actions, v_max, k);
}

namespace {

Policy greedy_policy(const PayoffTable& payoff) {
  Matrix probs = Matrix::Zero(payoff.u.rows(), payoff.u.cols());
  for (Index s = 0; s < probs.rows(); ++s) {
    Index best = 0;
    payoff.u.row(s).maxCoeff(&best);
    probs(s, best) = 1.0;
  }
  return Policy(std::move(probs));
}

}  // namespace

WsacResult run_wsac_on_moments(const BellmanMoments& moments, const Policy& pi_ref,
                               const WsacConfig& cfg, const BellmanMoments* exact_diagnostics) {
  cfg.validate();
  if (pi_ref.n_states() != moments.n_states || pi_ref.n_actions() != moments.n_actions) {
    throw ConfigError("run_wsac: reference policy shape does not match the data");
  }
  const double v_max = 1.0 / (1.0 - moments.gamma);
  OracleState state =
      OracleState::initial(moments.n_states, moments.n_actions, cfg.eta_for(moments.n_actions, v_max), cfg.k);

  std::vector<Policy> iterates;
  iterates.reserve(static_cast<std::size_t>(cfg.k));
  RunTrace trace;
  trace.records.reserve(static_cast<std::size_t>(cfg.k));
  std::optional<Matrix> warm_r;
  std::optional<Matrix> warm_c;

  for (int k = 1; k <= cfg.k; ++k) {
    const Policy& current = state.policy;
    iterates.push_back(current);
    const double lambda = cfg.lambda_at(k);

    CriticSolution critic_r =
        critic_solve_reward(moments, current, cfg.beta, cfg.weight_class, cfg.critic_cfg, warm_r);
    // A zero multiplier would leave the cost critic unidentified; clamp for the solve.
    const double lambda_critic = std::max(lambda, 1e-12);
    CriticSolution critic_c = critic_solve_cost(moments, current, lambda_critic, cfg.beta,
                                                cfg.weight_class, cfg.critic_cfg, warm_c);
    if (cfg.warm_start_critics) {
      warm_r = critic_r.table.values();
      warm_c = critic_c.table.values();
    }

    PayoffTable payoff;
    if (cfg.payoff_rule == PayoffRule::kAggressionLimited) {
      payoff = lambda > 0.0 ? aggression_limited_payoff(critic_r.table, critic_c.table, lambda, pi_ref)
                            : PayoffTable{critic_r.table.values()};
    } else {
      payoff = PayoffTable{critic_r.table.values() - lambda * critic_c.table.values()};
    }

    IterationRecord rec;
    rec.k = k;
    rec.lambda = lambda;
    rec.critic_objective_r = critic_r.objective;
    rec.critic_objective_c = critic_c.objective;
    rec.loss_l_r = critic_r.loss;
    rec.loss_l_c = critic_c.loss;
    rec.bellman_err_r = critic_r.bellman_error;
    rec.bellman_err_c = critic_c.bellman_error;
    rec.payoff_min = payoff.u.minCoeff();
    rec.payoff_max = payoff.u.maxCoeff();
    if (exact_diagnostics != nullptr) {
      rec.exact_loss_l_r = loss_l(*exact_diagnostics, current, critic_r.table.values());
      rec.exact_bellman_err_r = weighted_bellman_error(*exact_diagnostics, current, critic_r.table.values(),
                                                       cfg.weight_class, Signal::kReward);
    }
    trace.records.push_back(rec);
    trace.reward_critics.push_back(std::move(critic_r.table));
    trace.cost_critics.push_back(std::move(critic_c.table));

    if (k < cfg.k) {
      if (cfg.actor == ActorUpdate::kExponentiatedWeights) {
        state = po_update(state, payoff);
      } else {
        state = OracleState{greedy_policy(payoff), state.eta, state.k_total, state.step + 1};
      }
    }
    trace.payoffs.push_back(std::move(payoff));
  }
  return WsacResult{MixturePolicy(std::move(iterates)), std::move(trace)};
}

WsacResult run_wsac(const Dataset& dataset, const Policy& pi_ref, const WsacConfig& cfg,
                    const BellmanMoments* exact_diagnostics) {
  if (cfg.mode != RunMode::kEmpirical) throw ConfigError("run_wsac: config mode must be empirical");
  return run_wsac_on_moments(empirical_moments(dataset), pi_ref, cfg, exact_diagnostics);
}

WsacResult run_wsac_exact(const Cmdp& cmdp, const Policy& behavior, const Policy& pi_ref,
                          const WsacConfig& cfg) {
  if (cfg.mode != RunMode::kExact) throw ConfigError("run_wsac_exact: config mode must be exact");
  const Occupancy mu = occupancy(cmdp, behavior);
  std::string warning;
  try {
    (void)importance_weights(occupancy(cmdp, pi_ref), mu);
  } catch (const CoverageError& e) {
    warning = e.what();
  }
  WsacResult result = run_wsac_on_moments(exact_moments(cmdp, mu), pi_ref, cfg);
  result.trace.coverage_warning = std::move(warning);
  return result;
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << "k,crit_obj_r,crit_obj_c,L_r,L_c,E_r,E_c,payoff_min,payoff_max\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : trace.records) {
    out << r.k << ',' << r.critic_objective_r << ',' << r.critic_objective_c << ',' << r.loss_l_r << ','
        << r.loss_l_c << ',' << r.bellman_err_r << ',' << r.bellman_err_c << ',' << r.payoff_min << ','
        << r.payoff_max << '\n';
  }
  out.precision(old_precision);
}

}  // namespace wsac
