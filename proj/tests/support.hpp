#pragma once

#include <vector>

#include "wsac/cmdp.hpp"
#include "wsac/rng.hpp"

namespace wsac::testing {

inline Matrix random_simplex_rows(CounterRng& rng, Index rows, Index cols, double sparsity = 0.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    double total = 0.0;
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform() < sparsity ? 0.0 : rng.uniform_open0();
      total += m(i, j);
    }
    if (total == 0.0) {
      m(i, static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(cols))) = 1.0;
      total = 1.0;
    }
    m.row(i) /= total;
  }
  return m;
}

inline Matrix random_table(CounterRng& rng, Index rows, Index cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = lo + (hi - lo) * rng.uniform();
  }
  return m;
}

inline Cmdp random_cmdp(CounterRng& rng, Index n_s, Index n_a, double gamma, double sparsity = 0.0) {
  Matrix p = random_simplex_rows(rng, n_s * n_a, n_s, sparsity);
  Matrix r = random_table(rng, n_s, n_a, 0.0, 1.0);
  Matrix c = random_table(rng, n_s, n_a, -1.0, 1.0);
  Vector rho = random_simplex_rows(rng, 1, n_s).row(0).transpose();
  return Cmdp(std::move(p), std::move(r), std::move(c), gamma, std::move(rho));
}

inline Policy random_policy(CounterRng& rng, Index n_s, Index n_a, double sparsity = 0.0) {
  return Policy(random_simplex_rows(rng, n_s, n_a, sparsity));
}

/// s0 -> s1 deterministically, s1 absorbing; r(s0)=0, r(s1)=1; rho = delta_s0.
inline Cmdp two_state_chain(double gamma = 0.9) {
  Matrix p(2, 2);
  p << 0.0, 1.0,
       0.0, 1.0;
  Matrix r(2, 1);
  r << 0.0, 1.0;
  Matrix c(2, 1);
  c << 0.5, -0.5;
  Vector rho(2);
  rho << 1.0, 0.0;
  return Cmdp(std::move(p), std::move(r), std::move(c), gamma, std::move(rho));
}

/// All deterministic policies of an (n_s, n_a) model.
inline std::vector<Policy> all_deterministic(Index n_s, Index n_a) {
  std::vector<Policy> out;
  std::vector<Index> acts(static_cast<std::size_t>(n_s), 0);
  for (;;) {
    out.push_back(Policy::deterministic(acts, n_a));
    std::size_t i = 0;
    while (i < acts.size() && ++acts[i] == n_a) acts[i++] = 0;
    if (i == acts.size()) break;
  }
  return out;
}

}  // namespace wsac::testing
