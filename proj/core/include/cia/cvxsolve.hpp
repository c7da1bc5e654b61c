#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace cia::cvx {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// min cᵀx  s.t.  A x = b,  x ≥ lower.  An empty `lower` means x ≥ 0.
struct LinearProgram {
  Vector cost;
  Matrix eq_matrix;
  Vector eq_rhs;
  Vector lower;
};

/// min ½xᵀQx + cᵀx  s.t.  A x = b,  x ≥ 0, with Q symmetric positive semidefinite.
/// `start`, when non-empty, must be a feasible point and replaces the phase-1 LP.
struct SimplexQP {
  Matrix hessian;
  Vector linear;
  Matrix eq_matrix;
  Vector eq_rhs;
  Vector start;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string_view to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  Vector x;
  /// Multipliers y of the equality rows (zero for rows dropped as redundant).
  Vector eq_duals;
  /// Multipliers of the bound constraints, ∇f(x) − Aᵀy.
  Vector reduced_costs;
  double objective = 0.0;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

/// Rows of [A | b] that survive rank-revealing elimination. `consistent` is
/// false when a dependent row disagrees with the kept rows in its rhs.
struct RowReduction {
  std::vector<int> kept;
  bool consistent = true;
};

RowReduction reduce_rows(const Matrix& a, const Vector& b, double pivot_tol = 1e-10,
                         double consistency_tol = 1e-9);

/// Dense two-phase primal simplex (tableau form, Bland's rule).
SolveResult solve_lp(const LinearProgram& lp);

/// Primal active-set method for convex QPs over {x ≥ 0, Ax = b}.
/// Handles singular Q by following zero-curvature descent directions.
SolveResult solve_qp(const SimplexQP& qp);

/// Attempted Cholesky of Q + shift·max(1, ‖Q‖)·I.
bool is_psd(const Matrix& q, double shift = 1e-12);

/// Euclidean projection of u onto the convex hull of the columns of `points`
/// (m × M), computed as a simplex-constrained QP over the convex weights.
/// Returns the weights; the projected point is points · weights.
Vector project_onto_hull_weights(const Matrix& points, const Vector& u);

}  // namespace cia::cvx
