#pragma once

#include "wsac/types.hpp"

namespace wsac {

/// maximize objective . x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  x >= 0.
/// Either constraint block may have zero rows.
struct LinearProgram {
  Vector objective;
  Matrix a_eq;
  Vector b_eq;
  Matrix a_ub;
  Vector b_ub;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  Vector x;
  double objective = 0.0;
  int pivots = 0;
};

/// Dense two-phase tableau simplex with Bland's rule. Intended for the small
/// occupancy LPs of tabular models (a few hundred variables).
LpResult solve_lp(const LinearProgram& lp, double tol = 1e-10, int max_pivots = 200000);

}  // namespace wsac
