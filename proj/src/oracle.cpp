#include "wsac/oracle.hpp"

#include <cmath>

namespace wsac {

OracleState OracleState::initial(Index n_states, Index n_actions, double eta, int k_total) {
  if (!std::isfinite(eta) || eta < 0.0 || (eta == 0.0 && n_actions > 1)) {
    throw ConfigError("OracleState: eta must be positive");
  }
  if (k_total < 1) throw ConfigError("OracleState: horizon K must be >= 1");
  return OracleState{Policy::uniform(n_states, n_actions), eta, k_total, 0};
}

PayoffTable aggression_limited_payoff(const QTable& f_r, const QTable& f_c, double lambda,
                                      const Policy& pi_ref) {
  if (!(lambda > 0.0)) throw ConfigError("aggression_limited_payoff: lambda must be > 0");
  const Matrix& fr = f_r.values();
  const Matrix& fc = f_c.values();
  if (fr.rows() != fc.rows() || fr.cols() != fc.cols() || fr.rows() != pi_ref.n_states() ||
      fr.cols() != pi_ref.n_actions()) {
    throw ConfigError("aggression_limited_payoff: shapes differ");
  }
  const Vector baseline = state_average(fc, pi_ref.probs());
  const Matrix excess = (fc.colwise() - baseline).cwiseMax(0.0);
  return PayoffTable{fr - lambda * excess};
}

OracleState po_update(const OracleState& state, const PayoffTable& payoff) {
  if (state.step >= state.k_total) throw ConfigError("po_update: planned horizon already reached");
  const Matrix& u = payoff.u;
  const Matrix& prev = state.policy.probs();
  if (u.rows() != prev.rows() || u.cols() != prev.cols()) throw ConfigError("po_update: payoff shape differs");
  if (!u.allFinite()) throw NumericalError("po_update: non-finite payoff");

  Matrix next(prev.rows(), prev.cols());
  for (Index s = 0; s < prev.rows(); ++s) {
    const double shift = u.row(s).maxCoeff();
    Eigen::RowVectorXd row =
        prev.row(s).array() * ((u.row(s).array() - shift) * state.eta).exp();
    double total = row.sum();
    if (!(total > 0.0)) {
      // Every supported action underflowed; fall back to the previous row.
      row = prev.row(s);
      total = row.sum();
    }
    next.row(s) = row / total;
  }
  return OracleState{Policy(std::move(next)), state.eta, state.k_total, state.step + 1};
}

double default_eta_from_log(double log_n_actions, double v_max, int k) {
  if (!(log_n_actions >= 0.0) || !(v_max > 0.0) || k < 1) {
    throw ConfigError("default_eta: arguments must be positive");
  }
  return std::sqrt(log_n_actions / (2.0 * v_max * v_max * static_cast<double>(k)));
}

double default_eta(Index n_actions, double v_max, int k) {
  if (n_actions < 1) throw ConfigError("default_eta: need at least one action");
  return default_eta_from_log(std::log(static_cast<double>(n_actions)), v_max, k);
}

double regret_audit(const std::vector<PayoffTable>& payoffs, const std::vector<Policy>& iterates,
                    const Policy& comparator, const Occupancy& comparator_occ) {
  if (payoffs.empty() || payoffs.size() != iterates.size()) {
    throw ConfigError("regret_audit: payoff and iterate lists must have equal, nonzero length");
  }
  const Vector state_weight = comparator_occ.state_marginal();
  double total = 0.0;
  for (std::size_t k = 0; k < payoffs.size(); ++k) {
    const Matrix& u = payoffs[k].u;
    if (u.rows() != comparator.n_states() || u.cols() != comparator.n_actions() ||
        iterates[k].n_states() != comparator.n_states() ||
        iterates[k].n_actions() != comparator.n_actions()) {
      throw ConfigError("regret_audit: shapes differ");
    }
    const Vector gap = state_average(u, comparator.probs()) - state_average(u, iterates[k].probs());
    total += state_weight.dot(gap);
  }
  return total / static_cast<double>(payoffs.size());
}

}  // namespace wsac
