#include "wsac/critics.hpp"

#include <cmath>
#include <sstream>

namespace wsac {

namespace {

/// (s,a) table -> vector indexed s*A + a.
Vector to_sa(const Matrix& table) {
  const Matrix t = table.transpose();
  return Eigen::Map<const Vector>(t.data(), t.size());
}

Matrix from_sa(const Vector& flat, Index n_states, Index n_actions) {
  return Eigen::Map<const Matrix>(flat.data(), n_actions, n_states).transpose();
}

void check_table(const BellmanMoments& moments, const Policy& policy, const Matrix& f) {
  if (policy.n_states() != moments.n_states || policy.n_actions() != moments.n_actions ||
      f.rows() != moments.n_states || f.cols() != moments.n_actions) {
    throw ConfigError("critic: table/policy shape does not match the data");
  }
}

double v_max_of(const BellmanMoments& m) { return 1.0 / (1.0 - m.gamma); }

}  // namespace

QTable::QTable(Matrix values, double lower, double upper)
    : values_(std::move(values)), lower_(lower), upper_(upper) {
  if (!(lower_ <= upper_)) throw ConfigError("QTable: lower bound exceeds upper bound");
  if (!values_.allFinite()) throw ConfigError("QTable: non-finite entry");
  if (values_.size() > 0 && (values_.minCoeff() < lower_ || values_.maxCoeff() > upper_)) {
    throw ConfigError("QTable: entries outside [lower, upper]");
  }
}

WeightClass WeightClass::box(double b_w) {
  if (!(b_w > 0.0) || !std::isfinite(b_w)) throw ConfigError("WeightClass: b_w must be positive");
  return {Kind::kBox, b_w};
}

WeightClass WeightClass::two_point(double c_inf) {
  if (!(c_inf > 0.0) || !std::isfinite(c_inf)) throw ConfigError("WeightClass: c_inf must be positive");
  return {Kind::kTwoPoint, c_inf};
}

void CriticSolverCfg::validate() const {
  if (max_iters < 1) throw ConfigError("CriticSolverCfg: max_iters must be >= 1");
  if (!std::isfinite(step_size)) throw ConfigError("CriticSolverCfg: step_size must be finite");
  if (!std::isfinite(tol)) throw ConfigError("CriticSolverCfg: tol must be finite");
  if (average_eval_every < 1) throw ConfigError("CriticSolverCfg: average_eval_every must be >= 1");
}

BellmanMoments empirical_moments(const Dataset& dataset) {
  const Index n_s = dataset.n_states();
  const Index n_a = dataset.n_actions();
  BellmanMoments m;
  m.n_states = n_s;
  m.n_actions = n_a;
  m.gamma = dataset.gamma();
  m.n_samples = dataset.size();
  m.mass = Matrix::Zero(n_s, n_a);
  m.next_mass = Matrix::Zero(n_s * n_a, n_s);
  for (auto& t : m.first) t = Matrix::Zero(n_s * n_a, n_s);
  for (auto& t : m.second) t = Matrix::Zero(n_s * n_a, n_s);
  const double inv_n = 1.0 / static_cast<double>(dataset.size());
  for (const Transition& t : dataset.transitions()) {
    const Index row = sa_index(t.s, t.a, n_a);
    m.mass(t.s, t.a) += inv_n;
    m.next_mass(row, t.s_next) += inv_n;
    m.first[0](row, t.s_next) += t.r * inv_n;
    m.first[1](row, t.s_next) += t.c * inv_n;
    m.second[0](row, t.s_next) += t.r * t.r * inv_n;
    m.second[1](row, t.s_next) += t.c * t.c * inv_n;
  }
  return m;
}

BellmanMoments exact_moments(const Cmdp& cmdp, const Occupancy& behavior_occ) {
  const Index n_s = cmdp.n_states();
  const Index n_a = cmdp.n_actions();
  if (behavior_occ.n_states() != n_s || behavior_occ.n_actions() != n_a) {
    throw ConfigError("exact_moments: occupancy shape does not match the CMDP");
  }
  BellmanMoments m;
  m.n_states = n_s;
  m.n_actions = n_a;
  m.gamma = cmdp.gamma();
  m.mass = behavior_occ.d;
  m.next_mass = Matrix(n_s * n_a, n_s);
  for (int k = 0; k < 2; ++k) {
    m.first[k] = Matrix(n_s * n_a, n_s);
    m.second[k] = Matrix(n_s * n_a, n_s);
  }
  for (Index s = 0; s < n_s; ++s) {
    for (Index a = 0; a < n_a; ++a) {
      const Index row = sa_index(s, a, n_a);
      m.next_mass.row(row) = behavior_occ.d(s, a) * cmdp.next_state_dist(s, a);
      const double r = cmdp.reward()(s, a);
      const double c = cmdp.cost()(s, a);
      m.first[0].row(row) = r * m.next_mass.row(row);
      m.first[1].row(row) = c * m.next_mass.row(row);
      m.second[0].row(row) = r * r * m.next_mass.row(row);
      m.second[1].row(row) = c * c * m.next_mass.row(row);
    }
  }
  return m;
}

double loss_l(const BellmanMoments& moments, const Policy& policy, const Matrix& f) {
  check_table(moments, policy, f);
  const Vector state_mass = moments.mass.rowwise().sum();
  return state_mass.dot(state_average(f, policy.probs())) - moments.mass.cwiseProduct(f).sum();
}

double loss_l(const Dataset& dataset, const Policy& policy, const QTable& f) {
  return loss_l(empirical_moments(dataset), policy, f.values());
}

Matrix weighted_residuals(const BellmanMoments& moments, const Policy& policy, const Matrix& f,
                          Signal kind) {
  check_table(moments, policy, f);
  const Vector next_value = moments.next_mass * state_average(f, policy.probs());
  const Vector first_sum = moments.first_of(kind).rowwise().sum();
  const Vector m = to_sa(moments.mass).cwiseProduct(to_sa(f)) - first_sum - moments.gamma * next_value;
  return from_sa(m, moments.n_states, moments.n_actions);
}

double weighted_bellman_error(const BellmanMoments& moments, const Policy& policy, const Matrix& f,
                              const WeightClass& wc, Signal kind) {
  const CriticObjective objective(moments, policy, kind, 0.0, 1.0, wc);
  check_table(moments, policy, f);
  return objective.error_part(f);
}

double weighted_bellman_error(const Dataset& dataset, const Policy& policy, const QTable& f,
                              const WeightClass& wc, Signal kind) {
  return weighted_bellman_error(empirical_moments(dataset), policy, f.values(), wc, kind);
}

CriticObjective::CriticObjective(const BellmanMoments& moments, const Policy& policy, Signal kind,
                                 double loss_coef, double beta, const WeightClass& wc)
    : moments_(moments),
      policy_(policy),
      kind_(kind),
      loss_coef_(loss_coef),
      beta_(beta),
      wc_(wc),
      state_mass_(moments.mass.rowwise().sum()),
      first_sum_(moments.first_of(kind).rowwise().sum()) {
  if (policy.n_states() != moments.n_states || policy.n_actions() != moments.n_actions) {
    throw ConfigError("critic: policy shape does not match the data");
  }
}

double CriticObjective::loss_part(const Matrix& f) const {
  return state_mass_.dot(state_average(f, policy_.probs())) - moments_.mass.cwiseProduct(f).sum();
}

double CriticObjective::error_part(const Matrix& f) const {
  const Vector f_pi = state_average(f, policy_.probs());
  const Vector f_sa = to_sa(f);
  if (wc_.kind == WeightClass::Kind::kBox) {
    const Vector m = to_sa(moments_.mass).cwiseProduct(f_sa) - first_sum_ -
                     moments_.gamma * (moments_.next_mass * f_pi);
    const double pos = m.cwiseMax(0.0).sum();
    const double neg = (-m).cwiseMax(0.0).sum();
    return wc_.bound * std::max(pos, neg);
  }
  const Matrix x = f_sa.replicate(1, moments_.n_states) -
                   moments_.gamma * f_pi.transpose().replicate(f_sa.size(), 1);
  const double sq = (moments_.next_mass.cwiseProduct(x.cwiseAbs2()) -
                     2.0 * moments_.first_of(kind_).cwiseProduct(x) + moments_.second_of(kind_))
                        .sum();
  return wc_.bound * std::max(sq, 0.0);
}

double CriticObjective::value(const Matrix& f) const {
  double v = 0.0;
  if (loss_coef_ != 0.0) v += loss_coef_ * loss_part(f);
  if (beta_ != 0.0) v += beta_ * error_part(f);
  return v;
}

double CriticObjective::value_and_subgradient(const Matrix& f, Matrix& grad) const {
  const Matrix& probs = policy_.probs();
  const Index n_s = moments_.n_states;
  const Index n_a = moments_.n_actions;
  const Vector f_pi = state_average(f, probs);

  double loss = 0.0;
  grad = Matrix::Zero(n_s, n_a);
  if (loss_coef_ != 0.0) {
    loss = state_mass_.dot(f_pi) - moments_.mass.cwiseProduct(f).sum();
    grad = loss_coef_ * (Matrix(probs.array().colwise() * state_mass_.array()) - moments_.mass);
  }
  if (beta_ == 0.0) return loss_coef_ * loss;

  const Vector f_sa = to_sa(f);
  Vector grad_sa;
  Vector grad_pi;
  double error = 0.0;
  if (wc_.kind == WeightClass::Kind::kBox) {
    const Vector mass_sa = to_sa(moments_.mass);
    const Vector m = mass_sa.cwiseProduct(f_sa) - first_sum_ - moments_.gamma * (moments_.next_mass * f_pi);
    const double pos = m.cwiseMax(0.0).sum();
    const double neg = (-m).cwiseMax(0.0).sum();
    // Bang-bang maximizer: w = b_w on the dominant sign, 0 elsewhere (ties at m = 0 get 0).
    const double sign = pos >= neg ? 1.0 : -1.0;
    Vector w(m.size());
    for (Index i = 0; i < m.size(); ++i) w(i) = (sign * m(i) > 0.0) ? wc_.bound : 0.0;
    error = wc_.bound * std::max(pos, neg);
    grad_sa = sign * w.cwiseProduct(mass_sa);
    grad_pi = -sign * moments_.gamma * (moments_.next_mass.transpose() * w);
  } else {
    const Matrix x = f_sa.replicate(1, n_s) - moments_.gamma * f_pi.transpose().replicate(f_sa.size(), 1);
    const Matrix& first = moments_.first_of(kind_);
    const double sq = (moments_.next_mass.cwiseProduct(x.cwiseAbs2()) - 2.0 * first.cwiseProduct(x) +
                       moments_.second_of(kind_))
                          .sum();
    error = wc_.bound * std::max(sq, 0.0);
    const Matrix g = 2.0 * wc_.bound * (moments_.next_mass.cwiseProduct(x) - first);
    grad_sa = g.rowwise().sum();
    grad_pi = -moments_.gamma * g.colwise().sum().transpose();
  }
  grad += beta_ * (from_sa(grad_sa, n_s, n_a) + Matrix(probs.array().colwise() * grad_pi.array()));
  return loss_coef_ * loss + beta_ * error;
}

namespace {

CriticSolution projected_subgradient(const CriticObjective& objective, Index n_states, Index n_actions,
                                     double lower, double upper, double v_max,
                                     const CriticSolverCfg& cfg,
                                     const std::optional<Matrix>& warm_start) {
  cfg.validate();
  const double step = cfg.step_size > 0.0 ? cfg.step_size : v_max;
  const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-4 * v_max;

  Matrix x;
  if (warm_start) {
    if (warm_start->rows() != n_states || warm_start->cols() != n_actions) {
      throw ConfigError("critic: warm start has wrong shape");
    }
    x = warm_start->cwiseMax(lower).cwiseMin(upper);
  } else if (cfg.init == CriticInit::kZero) {
    x = Matrix::Constant(n_states, n_actions, std::clamp(0.0, lower, upper));
  } else {
    x = Matrix::Constant(n_states, n_actions, 0.5 * (lower + upper));
  }

  Matrix average = x;
  Matrix best = x;
  double best_value = objective.value(x);
  Matrix grad;
  Matrix sum_sq = Matrix::Zero(n_states, n_actions);

  CriticSolution sol{QTable(x, lower, upper), 0.0, 0.0, 0.0, 0, {}};
  sol.trace.reserve(static_cast<std::size_t>(cfg.max_iters));
  int t = 1;
  for (; t <= cfg.max_iters; ++t) {
    const double current = objective.value_and_subgradient(x, grad);
    if (!std::isfinite(current) || !grad.allFinite()) {
      throw NumericalError("critic solver: non-finite objective or subgradient");
    }
    if (current < best_value) {
      best_value = current;
      best = x;
    }
    // Components pushing against an active bound do not move the iterate.
    Matrix projected = grad;
    for (Index i = 0; i < projected.size(); ++i) {
      if ((x(i) <= lower && grad(i) > 0.0) || (x(i) >= upper && grad(i) < 0.0)) projected(i) = 0.0;
    }
    // Convexity gives F(x) - F* <= sum |projected_i| * (upper - lower).
    if (projected.lpNorm<1>() * (upper - lower) <= tol) {
      sol.trace.push_back(best_value);
      break;
    }
    if (cfg.step_rule == StepRule::kDiminishing) {
      x -= (step / std::sqrt(static_cast<double>(t))) * grad;
    } else {
      sum_sq += projected.cwiseAbs2();
      for (Index i = 0; i < x.size(); ++i) {
        if (sum_sq(i) > 0.0) x(i) -= step * projected(i) / std::sqrt(sum_sq(i));
      }
    }
    x = x.cwiseMax(lower).cwiseMin(upper);
    average += (x - average) / static_cast<double>(t + 1);
    if (t % cfg.average_eval_every == 0 || t == cfg.max_iters) {
      const double avg_value = objective.value(average);
      if (avg_value < best_value) {
        best_value = avg_value;
        best = average;
      }
    }
    sol.trace.push_back(best_value);
  }

  const double final_value = objective.value(x);
  if (final_value < best_value) {
    best_value = final_value;
    best = x;
  }
  if (!sol.trace.empty()) sol.trace.back() = best_value;
  sol.table = QTable(best, lower, upper);
  sol.objective = best_value;
  sol.loss = objective.loss_part(best);
  sol.bellman_error = objective.error_part(best);
  sol.iterations = std::min(t, cfg.max_iters);
  return sol;
}

}  // namespace

CriticSolution critic_solve_reward(const BellmanMoments& moments, const Policy& policy, double beta,
                                   const WeightClass& wc, const CriticSolverCfg& cfg,
                                   const std::optional<Matrix>& warm_start) {
  if (moments.mass.size() == 0) throw ConfigError("critic_solve_reward: empty dataset");
  if (!(beta >= 0.0)) throw ConfigError("critic_solve_reward: beta must be >= 0");
  const double v_max = v_max_of(moments);
  const CriticObjective objective(moments, policy, Signal::kReward, 1.0, beta, wc);
  return projected_subgradient(objective, moments.n_states, moments.n_actions, 0.0, v_max, v_max, cfg,
                               warm_start);
}

CriticSolution critic_solve_reward(const Dataset& dataset, const Policy& policy, double beta,
                                   const WeightClass& wc, const CriticSolverCfg& cfg) {
  return critic_solve_reward(empirical_moments(dataset), policy, beta, wc, cfg);
}

CriticSolution critic_solve_cost(const BellmanMoments& moments, const Policy& policy, double lambda,
                                 double beta, const WeightClass& wc, const CriticSolverCfg& cfg,
                                 const std::optional<Matrix>& warm_start) {
  if (moments.mass.size() == 0) throw ConfigError("critic_solve_cost: empty dataset");
  if (!(lambda > 0.0)) throw ConfigError("critic_solve_cost: lambda must be > 0");
  if (!(beta >= 0.0)) throw ConfigError("critic_solve_cost: beta must be >= 0");
  const double v_max = v_max_of(moments);
  const CriticObjective objective(moments, policy, Signal::kCost, -lambda, beta, wc);
  return projected_subgradient(objective, moments.n_states, moments.n_actions, -v_max, v_max, v_max, cfg,
                               warm_start);
}

CriticSolution critic_solve_cost(const Dataset& dataset, const Policy& policy, double lambda,
                                 double beta, const WeightClass& wc, const CriticSolverCfg& cfg) {
  return critic_solve_cost(empirical_moments(dataset), policy, lambda, beta, wc, cfg);
}

}  // namespace wsac
