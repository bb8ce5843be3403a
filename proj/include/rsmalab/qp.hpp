#pragma once

#include <vector>

#include "rsmalab/linalg.hpp"

namespace rsmalab {

/// Strictly convex inequality-form QP in the step d:
///   minimize   1/2 d^T H d + g^T d
///   subject to J d + c >= 0,   lower <= d <= upper   (bounds may be +-inf).
struct QpProblem {
  Matrix hessian;
  Vector gradient;
  Matrix jacobian;  // m x n
  Vector offset;    // m
  Vector lower;
  Vector upper;

  [[nodiscard]] Eigen::Index dimension() const { return gradient.size(); }
  [[nodiscard]] Eigen::Index n_constraints() const { return offset.size(); }
};

enum class QpStatus { optimal, relaxed, infeasible, iteration_limit };

struct QpResult {
  Vector step;
  Vector multipliers;        // >= 0, one per general constraint
  Vector lower_multipliers;  // >= 0
  Vector upper_multipliers;  // >= 0
  /// Fraction in [0, 1] by which violated linearized constraints were relaxed;
  /// zero when the QP was solved as stated.
  double relaxation = 0.0;
  QpStatus status = QpStatus::optimal;
  int iterations = 0;
};

/// Rows a_i^T x >= b_i of a generic QP with a known feasible start.
struct ActiveSetQp {
  Matrix hessian;
  Vector gradient;
  Matrix rows;  // m x n
  Vector rhs;   // m
};

struct ActiveSetResult {
  Vector x;
  Vector multipliers;  // per row
  std::vector<Eigen::Index> active_rows;
  bool converged = false;
  int iterations = 0;
};

/// Primal active-set method (Goldfarb-style working set with one add/drop per
/// iteration). x0 must satisfy every row; the Hessian must be SPD.
ActiveSetResult solve_active_set(const ActiveSetQp& qp, const Vector& x0, int max_iterations = 0);

/// Solves the SQP subproblem. When the linearized constraints are inconsistent
/// the violated rows are relaxed with an extra variable delta (rows read
/// J d + (1 - delta) c >= 0) that is driven to zero by a large penalty.
QpResult solve_qp(const QpProblem& qp);

}  // namespace rsmalab
