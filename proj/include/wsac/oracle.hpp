#pragma once

#include <vector>

#include "wsac/cmdp.hpp"
#include "wsac/critics.hpp"

namespace wsac {

/// Per-(s,a) payoff handed to the policy optimization oracle.
struct PayoffTable {
  Matrix u;
};

/// Exponentiated-weights oracle state.
struct OracleState {
  Policy policy;
  double eta = 0.0;
  int k_total = 1;
  int step = 0;

  static OracleState initial(Index n_states, Index n_actions, double eta, int k_total);
};

/// u(s,a) = f_r(s,a) - lambda * max(f_c(s,a) - f_c(s, pi_ref), 0).
PayoffTable aggression_limited_payoff(const QTable& f_r, const QTable& f_c, double lambda,
                                      const Policy& pi_ref);

/// pi_{k+1}(a|s) proportional to pi_k(a|s) exp(eta u(s,a)), with the per-state max
/// payoff subtracted before exponentiation.
OracleState po_update(const OracleState& state, const PayoffTable& payoff);

/// eta = sqrt(log|A| / (2 V_max^2 K)).
double default_eta(Index n_actions, double v_max, int k);
/// Same formula with log|A| supplied directly.
double default_eta_from_log(double log_n_actions, double v_max, int k);

/// Empirical optimization error against a comparator:
/// (1/K) sum_k E_{s ~ d^comparator}[u_k(s, comparator) - u_k(s, pi_k)].
double regret_audit(const std::vector<PayoffTable>& payoffs, const std::vector<Policy>& iterates,
                    const Policy& comparator, const Occupancy& comparator_occ);

}  // namespace wsac
