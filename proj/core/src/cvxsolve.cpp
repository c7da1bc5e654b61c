#include "cia/cvxsolve.hpp"

#include "cia/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cia::cvx {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

RowReduction reduce_rows(const Matrix& a, const Vector& b, double pivot_tol,
                         double consistency_tol) {
  RowReduction out;
  const Eigen::Index n = a.cols();
  // Accepted rows, eliminated against their predecessors, normalized at the pivot.
  std::vector<Vector> rows;
  std::vector<double> rhs;
  std::vector<Eigen::Index> pivots;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Vector row = a.row(r).transpose();
    double beta = b(r);
    const double scale = std::max(1.0, row.cwiseAbs().maxCoeff() + std::abs(beta));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const double f = row(pivots[j]);
      if (f != 0.0) {
        row -= f * rows[j];
        beta -= f * rhs[j];
      }
    }
    Eigen::Index piv = 0;
    const double mag = n > 0 ? row.cwiseAbs().maxCoeff(&piv) : 0.0;
    if (mag <= pivot_tol * scale) {
      if (std::abs(beta) > consistency_tol * scale) out.consistent = false;
      continue;
    }
    // maxCoeff returns the first maximal index, i.e. lowest-index tie breaking.
    const double p = row(piv);
    rows.push_back(row / p);
    rhs.push_back(beta / p);
    pivots.push_back(piv);
    out.kept.push_back(static_cast<int>(r));
  }
  return out;
}

namespace {

constexpr double kReducedCostTol = 1e-11;
constexpr double kPivotTol = 1e-11;
constexpr double kFeasibilityTol = 1e-9;

// Tableau with a separate reduced-cost row. Column `rhs_col` holds the basic
// values; cost(rhs_col) holds minus the objective.
struct Tableau {
  Matrix t;
  Vector cost;
  std::vector<Eigen::Index> basis;
  Eigen::Index rhs_col = 0;

  void pivot(Eigen::Index row, Eigen::Index col) {
    t.row(row) /= t(row, col);
    t(row, col) = 1.0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f != 0.0) {
        t.row(i) -= f * t.row(row);
        t(i, col) = 0.0;
      }
    }
    const double f = cost(col);
    if (f != 0.0) {
      cost -= f * t.row(row).transpose();
      cost(col) = 0.0;
    }
    basis[static_cast<std::size_t>(row)] = col;
  }
};

enum class PhaseOutcome { kOptimal, kUnbounded, kIterationLimit };

// Bland's rule: lowest-index entering column, lowest-index leaving variable on ratio ties.
PhaseOutcome run_bland(Tableau& tab, Eigen::Index allowed_cols, int max_pivots, int& pivots) {
  for (int it = 0;; ++it) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < allowed_cols; ++j) {
      if (tab.cost(j) < -kReducedCostTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return PhaseOutcome::kOptimal;
    if (it >= max_pivots) return PhaseOutcome::kIterationLimit;

    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < tab.t.rows(); ++i) {
      const double a = tab.t(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(0.0, tab.t(i, tab.rhs_col)) / a;
      if (leave < 0 || ratio < best - 1e-12 * (1.0 + best)) {
        best = ratio;
        leave = i;
      } else if (ratio <= best + 1e-12 * (1.0 + best) &&
                 tab.basis[static_cast<std::size_t>(i)] <
                     tab.basis[static_cast<std::size_t>(leave)]) {
        leave = i;
      }
    }
    if (leave < 0) return PhaseOutcome::kUnbounded;
    tab.pivot(leave, enter);
    ++pivots;
  }
}

}  // namespace

SolveResult solve_lp(const LinearProgram& lp) {
  const Eigen::Index n = lp.cost.size();
  if (lp.eq_matrix.cols() != n || lp.eq_matrix.rows() != lp.eq_rhs.size() ||
      (lp.lower.size() != 0 && lp.lower.size() != n)) {
    throw Error(ErrorCode::kInvalidArgument, "linear program dimensions do not agree");
  }
  if (!lp.cost.allFinite() || !lp.eq_matrix.allFinite() || !lp.eq_rhs.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "linear program data must be finite");
  }
  const Vector lower = lp.lower.size() == n ? lp.lower : Vector::Zero(n);
  const Vector shifted_rhs = lp.eq_rhs - lp.eq_matrix * lower;

  SolveResult result;
  result.eq_duals = Vector::Zero(lp.eq_matrix.rows());

  const RowReduction red = reduce_rows(lp.eq_matrix, shifted_rhs);
  if (!red.consistent) {
    result.status = SolveStatus::kInfeasible;
    return result;
  }
  const auto r = static_cast<Eigen::Index>(red.kept.size());
  Matrix a(r, n);
  Vector b(r);
  Vector sign(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    a.row(i) = lp.eq_matrix.row(red.kept[static_cast<std::size_t>(i)]);
    b(i) = shifted_rhs(red.kept[static_cast<std::size_t>(i)]);
    sign(i) = b(i) < 0.0 ? -1.0 : 1.0;
    a.row(i) *= sign(i);
    b(i) *= sign(i);
  }

  Tableau tab;
  tab.rhs_col = n + r;
  tab.t = Matrix::Zero(r, n + r + 1);
  tab.t.leftCols(n) = a;
  tab.t.middleCols(n, r).setIdentity();
  tab.t.col(tab.rhs_col) = b;
  tab.basis.resize(static_cast<std::size_t>(r));
  for (Eigen::Index i = 0; i < r; ++i) tab.basis[static_cast<std::size_t>(i)] = n + i;

  // Phase 1: minimize the sum of artificials.
  tab.cost = Vector::Zero(n + r + 1);
  for (Eigen::Index i = 0; i < r; ++i) {
    tab.cost.head(n) -= tab.t.row(i).head(n).transpose();
    tab.cost(tab.rhs_col) -= b(i);
  }
  const int max_pivots = static_cast<int>(10 * (n + lp.eq_matrix.rows()));
  int pivots = 0;
  PhaseOutcome phase = run_bland(tab, n + r, max_pivots, pivots);
  const double infeasibility = -tab.cost(tab.rhs_col);
  const double rhs_scale = std::max(1.0, r > 0 ? b.cwiseAbs().maxCoeff() : 0.0);

  auto extract_x = [&]() {
    Vector x = Vector::Zero(n);
    for (Eigen::Index i = 0; i < r; ++i) {
      const Eigen::Index j = tab.basis[static_cast<std::size_t>(i)];
      if (j < n) x(j) = tab.t(i, tab.rhs_col);
    }
    return x;
  };

  if (phase == PhaseOutcome::kIterationLimit) {
    result.status = SolveStatus::kIterationLimit;
    result.x = extract_x() + lower;
    result.iterations = pivots;
    return result;
  }
  if (infeasibility > kFeasibilityTol * rhs_scale) {
    result.status = SolveStatus::kInfeasible;
    result.iterations = pivots;
    return result;
  }

  // Drive zero-level artificials out of the basis where possible.
  for (Eigen::Index i = 0; i < r; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(tab.t(i, j)) > 1e-9) {
        tab.pivot(i, j);
        ++pivots;
        break;
      }
    }
  }

  // Phase 2 on the original cost; artificial columns may not re-enter.
  tab.cost = Vector::Zero(n + r + 1);
  tab.cost.head(n) = lp.cost;
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index j = tab.basis[static_cast<std::size_t>(i)];
    const double cb = j < n ? lp.cost(j) : 0.0;
    if (cb != 0.0) tab.cost -= cb * tab.t.row(i).transpose();
  }
  int phase2_pivots = 0;
  phase = run_bland(tab, n, max_pivots, phase2_pivots);
  pivots += phase2_pivots;
  result.iterations = pivots;

  if (phase == PhaseOutcome::kUnbounded) {
    result.status = SolveStatus::kUnbounded;
    result.x = extract_x() + lower;
    return result;
  }

  // Recompute basic values and duals from the original data for accuracy.
  Matrix basis_matrix = Matrix::Zero(r, r);
  Vector basis_cost(r);
  bool all_structural = true;
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index j = tab.basis[static_cast<std::size_t>(i)];
    if (j < n) {
      basis_matrix.col(i) = a.col(j);
      basis_cost(i) = lp.cost(j);
    } else {
      basis_matrix(j - n, i) = 1.0;
      basis_cost(i) = 0.0;
      all_structural = false;
    }
  }
  Vector x = extract_x();
  Vector y = Vector::Zero(r);
  if (r > 0) {
    Eigen::FullPivLU<Matrix> lu(basis_matrix);
    if (lu.isInvertible()) {
      if (all_structural) {
        const Vector xb = lu.solve(b);
        for (Eigen::Index i = 0; i < r; ++i) {
          x(tab.basis[static_cast<std::size_t>(i)]) = std::max(0.0, xb(i));
        }
      }
      y = basis_matrix.transpose().fullPivLu().solve(basis_cost);
    }
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    result.eq_duals(red.kept[static_cast<std::size_t>(i)]) = sign(i) * y(i);
  }
  result.x = x + lower;
  result.reduced_costs = lp.cost - lp.eq_matrix.transpose() * result.eq_duals;
  result.objective = lp.cost.dot(result.x);
  result.status =
      phase == PhaseOutcome::kOptimal ? SolveStatus::kOptimal : SolveStatus::kIterationLimit;
  return result;
}

bool is_psd(const Matrix& q, double shift) {
  if (q.rows() != q.cols()) return false;
  if (q.rows() == 0) return true;
  if (!q.isApprox(q.transpose(), 1e-12)) return false;
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  Matrix shifted = q;
  shifted.diagonal().array() += shift * scale;
  Eigen::LLT<Matrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

namespace {

Matrix select_cols(const Matrix& a, const std::vector<Eigen::Index>& cols) {
  Matrix out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  return out;
}

// Orthonormal basis of ker(A) via SVD with a relative rank threshold.
Matrix null_space(const Matrix& a) {
  const Eigen::Index f = a.cols();
  if (a.rows() == 0 || f == 0) return Matrix::Identity(f, f);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++rank;
  }
  return svd.matrixV().rightCols(f - rank);
}

// Least-squares multipliers y with A_Fᵀ y ≈ g_F.
Vector equality_multipliers(const Matrix& a_free, const Vector& g_free, Eigen::Index rows) {
  if (rows == 0) return Vector::Zero(0);
  if (a_free.cols() == 0) return Vector::Zero(rows);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a_free.transpose());
  cod.setThreshold(1e-10);
  return cod.solve(g_free);
}

}  // namespace

SolveResult solve_qp(const SimplexQP& qp) {
  const Eigen::Index n = qp.linear.size();
  if (qp.hessian.rows() != n || qp.hessian.cols() != n || qp.eq_matrix.cols() != n ||
      qp.eq_matrix.rows() != qp.eq_rhs.size() || (qp.start.size() != 0 && qp.start.size() != n)) {
    throw Error(ErrorCode::kInvalidArgument, "quadratic program dimensions do not agree");
  }
  if (!is_psd(qp.hessian)) {
    throw Error(ErrorCode::kInvalidArgument, "quadratic program Hessian is not positive semidefinite");
  }

  SolveResult result;
  result.eq_duals = Vector::Zero(qp.eq_matrix.rows());
  const RowReduction red = reduce_rows(qp.eq_matrix, qp.eq_rhs);
  if (!red.consistent) {
    result.status = SolveStatus::kInfeasible;
    return result;
  }
  const auto r = static_cast<Eigen::Index>(red.kept.size());
  Matrix a(r, n);
  Vector b(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    a.row(i) = qp.eq_matrix.row(red.kept[static_cast<std::size_t>(i)]);
    b(i) = qp.eq_rhs(red.kept[static_cast<std::size_t>(i)]);
  }

  Vector x;
  int iterations = 0;
  const bool start_ok = qp.start.size() == n && (qp.start.array() >= 0.0).all() &&
                        (r == 0 || (a * qp.start - b).cwiseAbs().maxCoeff() <=
                                       1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()));
  if (start_ok) {
    x = qp.start;
  } else {
    LinearProgram phase1{Vector::Zero(n), a, b, {}};
    const SolveResult feasible = solve_lp(phase1);
    iterations += feasible.iterations;
    if (feasible.status != SolveStatus::kOptimal) {
      result.status = SolveStatus::kInfeasible;
      result.iterations = iterations;
      return result;
    }
    x = feasible.x;
  }

  // Working set: indices held at their zero bound.
  std::vector<bool> at_bound(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) at_bound[static_cast<std::size_t>(i)] = x(i) <= 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (at_bound[static_cast<std::size_t>(i)]) x(i) = 0.0;
  }

  const int max_changes = static_cast<int>(50 * n) + 10;
  Vector duals = Vector::Zero(r);
  for (int changes = 0;; ++iterations) {
    if (changes > max_changes) {
      result.status = SolveStatus::kIterationLimit;
      break;
    }
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!at_bound[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    }
    const Vector grad = qp.hessian * x + qp.linear;
    const double grad_scale = 1.0 + grad.cwiseAbs().maxCoeff();
    const auto f = static_cast<Eigen::Index>(free_idx.size());

    Vector step = Vector::Zero(n);
    bool zero_curvature = false;
    if (f > 0) {
      const Matrix a_free = select_cols(a, free_idx);
      const Matrix z = null_space(a_free);
      if (z.cols() > 0) {
        Matrix q_free(f, f);
        Vector g_free(f);
        for (Eigen::Index p = 0; p < f; ++p) {
          g_free(p) = grad(free_idx[static_cast<std::size_t>(p)]);
          for (Eigen::Index s = 0; s < f; ++s) {
            q_free(p, s) = qp.hessian(free_idx[static_cast<std::size_t>(p)],
                                      free_idx[static_cast<std::size_t>(s)]);
          }
        }
        const Matrix h = z.transpose() * q_free * z;
        const Vector rg = z.transpose() * g_free;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
        const Vector& lam = eig.eigenvalues();
        const Matrix& u = eig.eigenvectors();
        const double eig_tol = 1e-11 * std::max(1.0, lam.cwiseAbs().maxCoeff());
        const Vector w = u.transpose() * rg;
        Vector kernel_part = Vector::Zero(w.size());
        Vector range_step = Vector::Zero(w.size());
        for (Eigen::Index k = 0; k < w.size(); ++k) {
          if (lam(k) > eig_tol) {
            range_step(k) = -w(k) / lam(k);
          } else {
            kernel_part(k) = w(k);
          }
        }
        Vector dz;
        if (kernel_part.norm() > 1e-12 * grad_scale) {
          zero_curvature = true;
          dz = -(u * kernel_part);
        } else {
          dz = u * range_step;
        }
        const Vector d_free = z * dz;
        for (Eigen::Index p = 0; p < f; ++p) step(free_idx[static_cast<std::size_t>(p)]) = d_free(p);
      }
    }

    const double x_scale = 1.0 + x.cwiseAbs().maxCoeff();
    if (!zero_curvature && step.cwiseAbs().maxCoeff() <= 1e-13 * x_scale) {
      const Matrix a_free = select_cols(a, free_idx);
      Vector g_free(f);
      for (Eigen::Index p = 0; p < f; ++p) g_free(p) = grad(free_idx[static_cast<std::size_t>(p)]);
      duals = equality_multipliers(a_free, g_free, r);
      const Vector reduced = r > 0 ? Vector(grad - a.transpose() * duals) : grad;
      Eigen::Index release = -1;
      double most_negative = -1e-10 * grad_scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (at_bound[static_cast<std::size_t>(i)] && reduced(i) < most_negative) {
          most_negative = reduced(i);
          release = i;
        }
      }
      if (release < 0) {
        result.status = SolveStatus::kOptimal;
        break;
      }
      at_bound[static_cast<std::size_t>(release)] = false;
      ++changes;
      continue;
    }

    double t_max = zero_curvature ? std::numeric_limits<double>::infinity() : 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : free_idx) {
      if (step(i) < -1e-15 * x_scale) {
        const double t = x(i) / -step(i);
        if (t < t_max) {
          t_max = t;
          blocking = i;
        }
      }
    }
    if (!std::isfinite(t_max)) {
      result.status = SolveStatus::kUnbounded;
      break;
    }
    x += t_max * step;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x(i) < 0.0) x(i) = 0.0;
    }
    if (blocking >= 0) {
      x(blocking) = 0.0;
      at_bound[static_cast<std::size_t>(blocking)] = true;
      ++changes;
    }
  }

  const Vector grad = qp.hessian * x + qp.linear;
  for (Eigen::Index i = 0; i < r; ++i) result.eq_duals(red.kept[static_cast<std::size_t>(i)]) = duals(i);
  result.x = x;
  result.reduced_costs = grad - qp.eq_matrix.transpose() * result.eq_duals;
  result.objective = 0.5 * x.dot(qp.hessian * x) + qp.linear.dot(x);
  result.iterations = iterations;
  return result;
}

Vector project_onto_hull_weights(const Matrix& points, const Vector& u) {
  const Eigen::Index count = points.cols();
  if (count == 0 || points.rows() != u.size()) {
    throw Error(ErrorCode::kInvalidArgument, "projection dimensions do not agree");
  }
  Eigen::Index nearest = 0;
  (points.colwise() - u).colwise().squaredNorm().minCoeff(&nearest);
  SimplexQP qp;
  qp.hessian = points.transpose() * points;
  qp.linear = -(points.transpose() * u);
  qp.eq_matrix = Matrix::Ones(1, count);
  qp.eq_rhs = Vector::Ones(1);
  qp.start = Vector::Unit(count, nearest);
  const SolveResult res = solve_qp(qp);
  if (res.status == SolveStatus::kIterationLimit || res.x.size() != count) {
    throw Error(ErrorCode::kIterationLimit, "hull projection did not converge");
  }
  return res.x;
}

}  // namespace cia::cvx
