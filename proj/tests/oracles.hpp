#pragma once

// Brute-force reference computations shared by the unit, property and acceptance tests.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "wsac/critics.hpp"
#include "wsac/dataset.hpp"
#include "wsac/rng.hpp"
#include "support.hpp"

namespace wsac::testing {

inline double residual(const Transition& t, const Policy& pi, const Matrix& f, double gamma, Signal kind) {
  const double sig = kind == Signal::kReward ? t.r : t.c;
  return f(t.s, t.a) - sig - gamma * pi.probs().row(t.s_next).dot(f.row(t.s_next));
}

// Brute-force max over w on a per-(s,a) grid {0, 0.1, ..., b_w}.
inline double grid_bellman_error(const Dataset& d, const Policy& pi, const Matrix& f, double b_w, Signal kind) {
  const Index n_sa = d.n_states() * d.n_actions();
  Vector per_sa = Vector::Zero(n_sa);
  for (const auto& t : d.transitions()) {
    per_sa(sa_index(t.s, t.a, d.n_actions())) += residual(t, pi, f, d.gamma(), kind);
  }
  per_sa /= static_cast<double>(d.size());
  std::vector<int> idx(static_cast<std::size_t>(n_sa), 0);
  double best = 0.0;
  for (;;) {
    double total = 0.0;
    for (Index j = 0; j < n_sa; ++j) total += 0.1 * b_w * idx[static_cast<std::size_t>(j)] * per_sa(j);
    best = std::max(best, std::abs(total));
    std::size_t j = 0;
    while (j < idx.size() && ++idx[j] == 11) idx[j++] = 0;
    if (j == idx.size()) break;
  }
  return best;
}

inline Dataset random_small_dataset(CounterRng& rng, Index n_s, Index n_a, std::size_t n, double gamma) {
  std::vector<Transition> ts;
  for (std::size_t i = 0; i < n; ++i) {
    Transition t;
    t.s = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n_s));
    t.a = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n_a));
    t.r = rng.uniform();
    t.c = 2.0 * rng.uniform() - 1.0;
    t.s_next = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n_s));
    ts.push_back(t);
  }
  return Dataset(std::move(ts), n_s, n_a, gamma, 0);
}

// Exhaustive lattice search with step h over the critic box for a 2-state, 2-action model.
inline double lattice_min(const CriticObjective& obj, double lo, double hi, double h) {
  const int steps = static_cast<int>(std::lround((hi - lo) / h));
  double best = 1e300;
  Matrix f(2, 2);
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      for (int k = 0; k <= steps; ++k) {
        for (int l = 0; l <= steps; ++l) {
          f << lo + i * h, lo + j * h, lo + k * h, lo + l * h;
          best = std::min(best, obj.value(f));
        }
      }
    }
  }
  return best;
}

// Best J_r over per-episode mixtures of two deterministic policies with J_c <= 0,
// mixing weight on a 1e-3 grid. Empty when no grid point is feasible.
inline std::optional<double> enumerated_safe_optimum(const Cmdp& m) {
  std::vector<ValueBundle> vals;
  for (const auto& p : all_deterministic(m.n_states(), m.n_actions())) vals.push_back(policy_eval(m, p));
  std::optional<double> best;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    for (std::size_t j = i; j < vals.size(); ++j) {
      for (int g = 0; g <= 1000; ++g) {
        const double alpha = g * 1e-3;
        const double jc = alpha * vals[i].j_c + (1 - alpha) * vals[j].j_c;
        const double jr = alpha * vals[i].j_r + (1 - alpha) * vals[j].j_r;
        if (jc <= 0.0 && (!best || jr > *best)) best = jr;
      }
    }
  }
  return best;
}

}  // namespace wsac::testing
