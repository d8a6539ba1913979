#include "wsac/simplex.hpp"

#include <cmath>
#include <vector>

namespace wsac {

namespace {

class Tableau {
 public:
  Tableau(Matrix table, std::vector<Index> basis, std::vector<bool> allowed, double tol)
      : t_(std::move(table)), basis_(std::move(basis)), allowed_(std::move(allowed)), tol_(tol) {}

  Index rows() const { return t_.rows() - 1; }
  Index cols() const { return t_.cols() - 1; }
  Matrix& table() { return t_; }
  std::vector<Index>& basis() { return basis_; }
  std::vector<bool>& allowed() { return allowed_; }
  double objective_value() const { return t_(rows(), cols()); }

  void pivot(Index row, Index col) {
    t_.row(row) /= t_(row, col);
    for (Index i = 0; i <= rows(); ++i) {
      if (i != row && t_(i, col) != 0.0) {
        const double factor = t_(i, col);
        t_.row(i) -= factor * t_.row(row);
        t_(i, col) = 0.0;
      }
    }
    basis_[static_cast<std::size_t>(row)] = col;
    ++pivots_;
  }

  /// Runs Bland's-rule iterations on the current objective row.
  LpStatus optimize(int max_pivots) {
    while (pivots_ < max_pivots) {
      Index entering = -1;
      for (Index j = 0; j < cols(); ++j) {
        if (allowed_[static_cast<std::size_t>(j)] && t_(rows(), j) < -tol_) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return LpStatus::kOptimal;

      Index leaving = -1;
      double best_ratio = 0.0;
      for (Index i = 0; i < rows(); ++i) {
        const double coef = t_(i, entering);
        if (coef <= tol_) continue;
        const double ratio = t_(i, cols()) / coef;
        if (leaving < 0 || ratio < best_ratio - tol_ ||
            (std::abs(ratio - best_ratio) <= tol_ &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leaving)])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
      if (leaving < 0) return LpStatus::kUnbounded;
      pivot(leaving, entering);
    }
    return LpStatus::kIterationLimit;
  }

  /// Rewrites the objective row for "maximize cost . x" in the current basis.
  void set_objective(const Vector& cost) {
    t_.row(rows()).setZero();
    t_.row(rows()).head(cost.size()) = -cost.transpose();
    for (Index i = 0; i < rows(); ++i) {
      const Index b = basis_[static_cast<std::size_t>(i)];
      const double cb = b < cost.size() ? cost(b) : 0.0;
      if (cb != 0.0) t_.row(rows()) += cb * t_.row(i);
    }
  }

  void drop_row(Index row) {
    Matrix reduced(t_.rows() - 1, t_.cols());
    reduced.topRows(row) = t_.topRows(row);
    reduced.bottomRows(t_.rows() - 1 - row) = t_.bottomRows(t_.rows() - 1 - row);
    t_ = std::move(reduced);
    basis_.erase(basis_.begin() + row);
  }

  int pivots() const { return pivots_; }

 private:
  Matrix t_;
  std::vector<Index> basis_;
  std::vector<bool> allowed_;
  double tol_;
  int pivots_ = 0;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tol, int max_pivots) {
  const Index n = lp.objective.size();
  const Index m_eq = lp.a_eq.rows();
  const Index m_ub = lp.a_ub.rows();
  if ((m_eq > 0 && (lp.a_eq.cols() != n || lp.b_eq.size() != m_eq)) ||
      (m_ub > 0 && (lp.a_ub.cols() != n || lp.b_ub.size() != m_ub))) {
    throw ConfigError("solve_lp: constraint dimensions do not match the objective");
  }
  const Index m = m_eq + m_ub;

  // Rows needing an artificial: every equality row, and inequality rows with
  // negative right-hand side (their slack enters with coefficient -1).
  std::vector<bool> needs_artificial(static_cast<std::size_t>(m), false);
  Index n_art = 0;
  for (Index i = 0; i < m; ++i) {
    const bool eq_row = i < m_eq;
    const double rhs = eq_row ? lp.b_eq(i) : lp.b_ub(i - m_eq);
    if (eq_row || rhs < 0.0) {
      needs_artificial[static_cast<std::size_t>(i)] = true;
      ++n_art;
    }
  }

  const Index n_cols = n + m_ub + n_art;
  Matrix table = Matrix::Zero(m + 1, n_cols + 1);
  std::vector<Index> basis(static_cast<std::size_t>(m));
  Index art_col = n + m_ub;
  for (Index i = 0; i < m; ++i) {
    const bool eq_row = i < m_eq;
    double rhs = eq_row ? lp.b_eq(i) : lp.b_ub(i - m_eq);
    if (eq_row) {
      table.row(i).head(n) = lp.a_eq.row(i);
    } else {
      table.row(i).head(n) = lp.a_ub.row(i - m_eq);
      table(i, n + (i - m_eq)) = 1.0;
    }
    table(i, n_cols) = rhs;
    if (rhs < 0.0) {
      table.row(i) *= -1.0;
    }
    if (needs_artificial[static_cast<std::size_t>(i)]) {
      table(i, art_col) = 1.0;
      basis[static_cast<std::size_t>(i)] = art_col++;
    } else {
      basis[static_cast<std::size_t>(i)] = n + (i - m_eq);
    }
  }

  std::vector<bool> allowed(static_cast<std::size_t>(n_cols), true);
  Tableau tab(std::move(table), std::move(basis), std::move(allowed), tol);

  LpResult result;
  if (n_art > 0) {
    Vector phase1 = Vector::Zero(n_cols);
    phase1.tail(n_art).setConstant(-1.0);
    tab.set_objective(phase1);
    const LpStatus status = tab.optimize(max_pivots);
    if (status == LpStatus::kIterationLimit) {
      result.status = status;
      result.pivots = tab.pivots();
      return result;
    }
    const double scale = 1.0 + (lp.b_eq.size() > 0 ? lp.b_eq.cwiseAbs().sum() : 0.0) +
                         (lp.b_ub.size() > 0 ? lp.b_ub.cwiseAbs().sum() : 0.0);
    if (tab.objective_value() < -std::sqrt(tol) * scale) {
      result.status = LpStatus::kInfeasible;
      result.pivots = tab.pivots();
      return result;
    }
    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linearly dependent and get dropped.
    for (Index i = tab.rows() - 1; i >= 0; --i) {
      const Index b = tab.basis()[static_cast<std::size_t>(i)];
      if (b < n + m_ub) continue;
      Index col = -1;
      for (Index j = 0; j < n + m_ub; ++j) {
        if (std::abs(tab.table()(i, j)) > tol) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        tab.pivot(i, col);
      } else {
        tab.drop_row(i);
      }
    }
    for (Index j = n + m_ub; j < n_cols; ++j) tab.allowed()[static_cast<std::size_t>(j)] = false;
  }

  Vector phase2 = Vector::Zero(n_cols);
  phase2.head(n) = lp.objective;
  tab.set_objective(phase2);
  result.status = tab.optimize(max_pivots);
  result.pivots = tab.pivots();
  if (result.status != LpStatus::kOptimal) return result;

  result.x = Vector::Zero(n);
  for (Index i = 0; i < tab.rows(); ++i) {
    const Index b = tab.basis()[static_cast<std::size_t>(i)];
    if (b < n) result.x(b) = std::max(0.0, tab.table()(i, tab.cols()));
  }
  result.objective = lp.objective.dot(result.x);
  return result;
}

}  // namespace wsac
