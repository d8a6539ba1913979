#include "wsac/cmdp.hpp"

#include <cmath>
#include <sstream>

#include "wsac/simplex.hpp"

namespace wsac {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Flow-constraint matrix of the occupancy LP: one row per state,
/// sum_a d(s,a) - gamma * sum_{s',a'} P(s|s',a') d(s',a') = (1-gamma) rho(s).
Matrix flow_matrix(const Cmdp& cmdp) {
  const Index n_s = cmdp.n_states();
  const Index n_a = cmdp.n_actions();
  Matrix flow = -cmdp.gamma() * cmdp.transition().transpose();
  for (Index s = 0; s < n_s; ++s) {
    for (Index a = 0; a < n_a; ++a) flow(s, sa_index(s, a, n_a)) += 1.0;
  }
  return flow;
}

Vector flatten(const Matrix& table) {
  // Row-major flattening so that entry (s,a) lands at s*n_actions + a.
  Vector out(table.size());
  for (Index s = 0; s < table.rows(); ++s) {
    for (Index a = 0; a < table.cols(); ++a) out(sa_index(s, a, table.cols())) = table(s, a);
  }
  return out;
}

Matrix unflatten(const Vector& flat, Index n_states, Index n_actions) {
  Matrix out(n_states, n_actions);
  for (Index s = 0; s < n_states; ++s) {
    for (Index a = 0; a < n_actions; ++a) out(s, a) = flat(sa_index(s, a, n_actions));
  }
  return out;
}

}  // namespace

Cmdp::Cmdp(Matrix transition, Matrix reward, Matrix cost, double gamma, Vector initial_dist,
           CmdpMetadata metadata, const Tolerances& tol)
    : n_states_(reward.rows()),
      n_actions_(reward.cols()),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      cost_(std::move(cost)),
      gamma_(gamma),
      initial_dist_(std::move(initial_dist)),
      metadata_(std::move(metadata)) {
  require(n_states_ > 0 && n_actions_ > 0, "Cmdp: need at least one state and one action");
  require(cost_.rows() == n_states_ && cost_.cols() == n_actions_,
          "Cmdp: cost table shape differs from reward table");
  require(transition_.rows() == n_states_ * n_actions_ && transition_.cols() == n_states_,
          "Cmdp: transition must be (S*A) x S");
  require(initial_dist_.size() == n_states_, "Cmdp: initial distribution has wrong length");
  require(std::isfinite(gamma_) && gamma_ >= 0.0 && gamma_ < 1.0, "Cmdp: gamma must lie in [0,1)");
  require(all_finite(transition_) && all_finite(reward_) && all_finite(cost_) &&
              initial_dist_.allFinite(),
          "Cmdp: non-finite entries");
  require(transition_.minCoeff() >= 0.0, "Cmdp: negative transition probability");
  for (Index row = 0; row < transition_.rows(); ++row) {
    if (std::abs(transition_.row(row).sum() - 1.0) > tol.distribution) {
      std::ostringstream msg;
      msg << "Cmdp: transition row (s=" << row / n_actions_ << ", a=" << row % n_actions_
          << ") sums to " << transition_.row(row).sum();
      throw ConfigError(msg.str());
    }
  }
  require(reward_.minCoeff() >= 0.0 && reward_.maxCoeff() <= 1.0, "Cmdp: rewards must lie in [0,1]");
  require(cost_.minCoeff() >= -1.0 && cost_.maxCoeff() <= 1.0, "Cmdp: costs must lie in [-1,1]");
  require(initial_dist_.minCoeff() >= 0.0 &&
              std::abs(initial_dist_.sum() - 1.0) <= tol.distribution,
          "Cmdp: initial distribution must be a probability vector");
}

Cmdp Cmdp::with_cost_budget(Matrix transition, Matrix reward, const Matrix& raw_cost, double kappa,
                            double gamma, Vector initial_dist, CmdpMetadata metadata) {
  require(kappa >= 0.0 && kappa <= 1.0, "Cmdp: cost budget must lie in [0,1]");
  metadata.kappa = kappa;
  Matrix shifted = raw_cost.array() - kappa;
  return Cmdp(std::move(transition), std::move(reward), std::move(shifted), gamma,
              std::move(initial_dist), std::move(metadata));
}

Policy::Policy(Matrix probs, double tol) : probs_(std::move(probs)) {
  require(probs_.rows() > 0 && probs_.cols() > 0, "Policy: empty table");
  require(probs_.allFinite() && probs_.minCoeff() >= 0.0, "Policy: probabilities must be finite and >= 0");
  for (Index s = 0; s < probs_.rows(); ++s) {
    if (std::abs(probs_.row(s).sum() - 1.0) > tol) {
      std::ostringstream msg;
      msg << "Policy: row " << s << " sums to " << probs_.row(s).sum();
      throw ConfigError(msg.str());
    }
  }
}

Policy Policy::uniform(Index n_states, Index n_actions) {
  return Policy(Matrix::Constant(n_states, n_actions, 1.0 / static_cast<double>(n_actions)));
}

Policy Policy::deterministic(const std::vector<Index>& actions, Index n_actions) {
  Matrix probs = Matrix::Zero(static_cast<Index>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    require(actions[s] >= 0 && actions[s] < n_actions, "Policy: action index out of range");
    probs(static_cast<Index>(s), actions[s]) = 1.0;
  }
  return Policy(std::move(probs));
}

MixturePolicy::MixturePolicy(std::vector<Policy> members) : members_(std::move(members)) {
  require(!members_.empty(), "MixturePolicy: empty mixture");
  for (const auto& p : members_) {
    require(p.n_states() == members_.front().n_states() &&
                p.n_actions() == members_.front().n_actions(),
            "MixturePolicy: members disagree in shape");
  }
}

Matrix MixturePolicy::average_probs() const {
  Matrix avg = Matrix::Zero(members_.front().n_states(), members_.front().n_actions());
  for (const auto& p : members_) avg += p.probs();
  return avg * weight();
}

void check_dims(const Cmdp& cmdp, const Policy& policy) {
  if (policy.n_states() != cmdp.n_states() || policy.n_actions() != cmdp.n_actions()) {
    throw ConfigError("policy shape does not match the CMDP");
  }
}

Matrix policy_transition(const Cmdp& cmdp, const Policy& policy) {
  check_dims(cmdp, policy);
  const Index n_s = cmdp.n_states();
  const Index n_a = cmdp.n_actions();
  Matrix p_pi = Matrix::Zero(n_s, n_s);
  for (Index s = 0; s < n_s; ++s) {
    for (Index a = 0; a < n_a; ++a) {
      const double w = policy(s, a);
      if (w != 0.0) p_pi.row(s) += w * cmdp.next_state_dist(s, a);
    }
  }
  return p_pi;
}

Matrix bellman_apply(const Cmdp& cmdp, const Policy& policy, const Matrix& f, Signal kind) {
  check_dims(cmdp, policy);
  if (f.rows() != cmdp.n_states() || f.cols() != cmdp.n_actions()) {
    throw ConfigError("bellman_apply: table shape does not match the CMDP");
  }
  const Vector next_value = cmdp.transition() * state_average(f, policy.probs());
  Matrix out = cmdp.signal(kind);
  for (Index s = 0; s < cmdp.n_states(); ++s) {
    for (Index a = 0; a < cmdp.n_actions(); ++a) {
      out(s, a) += cmdp.gamma() * next_value(sa_index(s, a, cmdp.n_actions()));
    }
  }
  return out;
}

ValueBundle policy_eval(const Cmdp& cmdp, const Policy& policy) {
  const Matrix p_pi = policy_transition(cmdp, policy);
  const Index n_s = cmdp.n_states();
  const Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n_s, n_s) - cmdp.gamma() * p_pi);

  ValueBundle out;
  out.v_r = lu.solve(state_average(cmdp.reward(), policy.probs()));
  out.v_c = lu.solve(state_average(cmdp.cost(), policy.probs()));
  const Vector next_r = cmdp.transition() * out.v_r;
  const Vector next_c = cmdp.transition() * out.v_c;
  out.q_r = cmdp.reward();
  out.q_c = cmdp.cost();
  for (Index s = 0; s < n_s; ++s) {
    for (Index a = 0; a < cmdp.n_actions(); ++a) {
      const Index row = sa_index(s, a, cmdp.n_actions());
      out.q_r(s, a) += cmdp.gamma() * next_r(row);
      out.q_c(s, a) += cmdp.gamma() * next_c(row);
    }
  }
  out.j_r = (1.0 - cmdp.gamma()) * cmdp.initial_dist().dot(out.v_r);
  out.j_c = (1.0 - cmdp.gamma()) * cmdp.initial_dist().dot(out.v_c);
  return out;
}

Occupancy occupancy(const Cmdp& cmdp, const Policy& policy, const Tolerances& tol) {
  const Matrix p_pi = policy_transition(cmdp, policy);
  const Index n_s = cmdp.n_states();
  // nu = (1-gamma) rho + gamma P_pi^T nu
  const Vector nu = (Matrix::Identity(n_s, n_s) - cmdp.gamma() * p_pi.transpose())
                        .partialPivLu()
                        .solve((1.0 - cmdp.gamma()) * cmdp.initial_dist());
  Occupancy occ{policy.probs().array().colwise() * nu.array()};
  // Round-off can leave tiny negatives at unreachable states.
  occ.d = occ.d.cwiseMax(0.0);
  if (std::abs(occ.d.sum() - 1.0) > tol.occupancy_sum) {
    throw NumericalError("occupancy: mass does not sum to one");
  }
  return occ;
}

ValueBundle mixture_eval(const Cmdp& cmdp, const MixturePolicy& mix) {
  ValueBundle out;
  bool first = true;
  for (const auto& member : mix.members()) {
    ValueBundle vb = policy_eval(cmdp, member);
    if (first) {
      out = std::move(vb);
      first = false;
      continue;
    }
    out.v_r += vb.v_r;
    out.v_c += vb.v_c;
    out.q_r += vb.q_r;
    out.q_c += vb.q_c;
    out.j_r += vb.j_r;
    out.j_c += vb.j_c;
  }
  const double w = mix.weight();
  out.v_r *= w;
  out.v_c *= w;
  out.q_r *= w;
  out.q_c *= w;
  out.j_r *= w;
  out.j_c *= w;
  return out;
}

Matrix importance_weights(const Occupancy& target, const Occupancy& behavior, const Tolerances& tol) {
  if (target.d.rows() != behavior.d.rows() || target.d.cols() != behavior.d.cols()) {
    throw ConfigError("importance_weights: occupancy shapes differ");
  }
  Matrix w = Matrix::Zero(target.d.rows(), target.d.cols());
  for (Index s = 0; s < w.rows(); ++s) {
    for (Index a = 0; a < w.cols(); ++a) {
      const double t = target.d(s, a);
      const double b = behavior.d(s, a);
      if (b > tol.support) {
        w(s, a) = t / b;
      } else if (t > tol.support) {
        std::ostringstream msg;
        msg << "coverage violation at (s=" << s << ", a=" << a << "): target mass " << t
            << " where behavior mass is " << b;
        throw CoverageError(msg.str(), s, a);
      }
    }
  }
  return w;
}

double concentrability(const Occupancy& target, const Occupancy& behavior, const Tolerances& tol) {
  const Matrix w = importance_weights(target, behavior, tol);
  return std::sqrt((behavior.d.array() * w.array().square()).sum());
}

Policy policy_from_occupancy(const Matrix& d, double zero_tol) {
  Matrix probs(d.rows(), d.cols());
  for (Index s = 0; s < d.rows(); ++s) {
    const Eigen::RowVectorXd row = d.row(s).cwiseMax(0.0);
    const double mass = row.sum();
    if (mass > zero_tol) {
      probs.row(s) = row / mass;
    } else {
      probs.row(s).setConstant(1.0 / static_cast<double>(d.cols()));
    }
  }
  return Policy(std::move(probs));
}

double min_cost(const Cmdp& cmdp) {
  LinearProgram lp;
  lp.objective = -flatten(cmdp.cost());
  lp.a_eq = flow_matrix(cmdp);
  lp.b_eq = (1.0 - cmdp.gamma()) * cmdp.initial_dist();
  const LpResult res = solve_lp(lp);
  if (res.status != LpStatus::kOptimal) throw NumericalError("min_cost: occupancy LP did not solve");
  return -res.objective;
}

Policy solve_optimal_safe(const Cmdp& cmdp) {
  LinearProgram lp;
  lp.objective = flatten(cmdp.reward());
  lp.a_eq = flow_matrix(cmdp);
  lp.b_eq = (1.0 - cmdp.gamma()) * cmdp.initial_dist();
  lp.a_ub = flatten(cmdp.cost()).transpose();
  lp.b_ub = Vector::Zero(1);
  const LpResult res = solve_lp(lp);
  if (res.status == LpStatus::kInfeasible) {
    const double best = min_cost(cmdp);
    std::ostringstream msg;
    msg << "solve_optimal_safe: no policy satisfies J_c <= 0 (minimal J_c = " << best << ")";
    throw InfeasibleError(msg.str(), best);
  }
  if (res.status != LpStatus::kOptimal) {
    throw NumericalError("solve_optimal_safe: occupancy LP did not reach optimality");
  }
  return policy_from_occupancy(unflatten(res.x, cmdp.n_states(), cmdp.n_actions()));
}

double optimal_unconstrained_j(const Cmdp& cmdp, Signal kind, bool maximize, double tol,
                               int max_iters) {
  const Index n_s = cmdp.n_states();
  const Index n_a = cmdp.n_actions();
  const Matrix& sig = cmdp.signal(kind);
  Vector v = Vector::Zero(n_s);
  for (int it = 0; it < max_iters; ++it) {
    const Vector next = cmdp.transition() * v;
    Vector updated(n_s);
    for (Index s = 0; s < n_s; ++s) {
      double best = maximize ? -INFINITY : INFINITY;
      for (Index a = 0; a < n_a; ++a) {
        const double q = sig(s, a) + cmdp.gamma() * next(sa_index(s, a, n_a));
        best = maximize ? std::max(best, q) : std::min(best, q);
      }
      updated(s) = best;
    }
    const double delta = (updated - v).cwiseAbs().maxCoeff();
    v = std::move(updated);
    if (delta <= tol) break;
  }
  return (1.0 - cmdp.gamma()) * cmdp.initial_dist().dot(v);
}

}  // namespace wsac
