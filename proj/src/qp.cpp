#include "rsmalab/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rsmalab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Solves the equality-constrained step problem for the current working set:
//   H p - A_W^T lambda = -grad,   A_W p = 0.
void solve_kkt(const Matrix& hessian, const Vector& grad, const Matrix& rows,
               const std::vector<Eigen::Index>& working, Vector& step, Vector& lambda) {
  const Eigen::Index n = hessian.rows();
  const auto w = static_cast<Eigen::Index>(working.size());
  Matrix kkt = Matrix::Zero(n + w, n + w);
  Vector rhs = Vector::Zero(n + w);
  kkt.topLeftCorner(n, n) = hessian;
  for (Eigen::Index j = 0; j < w; ++j) {
    const auto row = rows.row(working[static_cast<size_t>(j)]);
    kkt.block(0, n + j, n, 1) = -row.transpose();
    kkt.block(n + j, 0, 1, n) = row;
  }
  rhs.head(n) = -grad;
  const Vector sol = kkt.fullPivLu().solve(rhs);
  step = sol.head(n);
  lambda = sol.tail(w);
}

}  // namespace

ActiveSetResult solve_active_set(const ActiveSetQp& qp, const Vector& x0, int max_iterations) {
  const Eigen::Index n = qp.gradient.size();
  const Eigen::Index m = qp.rhs.size();
  if (qp.hessian.rows() != n || qp.hessian.cols() != n || qp.rows.rows() != m ||
      (m > 0 && qp.rows.cols() != n) || x0.size() != n) {
    throw std::invalid_argument("solve_active_set: inconsistent dimensions");
  }
  if (max_iterations <= 0) max_iterations = static_cast<int>(50 * (n + m) + 100);

  ActiveSetResult result;
  result.x = x0;
  result.multipliers = Vector::Zero(m);
  std::vector<Eigen::Index> working;
  std::vector<bool> in_working(static_cast<size_t>(m), false);

  const double scale = 1.0 + qp.gradient.lpNorm<Eigen::Infinity>() +
                       qp.hessian.lpNorm<Eigen::Infinity>();
  const double lambda_tol = 1e-12 * scale;

  Vector step;
  Vector lambda;
  for (int iter = 0; iter < max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Vector grad = qp.hessian * result.x + qp.gradient;
    solve_kkt(qp.hessian, grad, qp.rows, working, step, lambda);
    // A full working set pins the iterate to a vertex.
    if (static_cast<Eigen::Index>(working.size()) == n) step.setZero();
    const double step_tol =
        1e-12 * (1.0 + result.x.lpNorm<Eigen::Infinity>() + grad.lpNorm<Eigen::Infinity>());

    if (step.lpNorm<Eigen::Infinity>() <= step_tol) {
      Eigen::Index drop = -1;
      double most_negative = -lambda_tol;
      for (Eigen::Index j = 0; j < lambda.size(); ++j) {
        if (lambda[j] < most_negative) {
          most_negative = lambda[j];
          drop = j;
        }
      }
      if (drop < 0) {
        result.multipliers.setZero();
        for (size_t j = 0; j < working.size(); ++j) {
          result.multipliers[working[j]] = std::max(0.0, lambda[static_cast<Eigen::Index>(j)]);
        }
        result.active_rows = working;
        result.converged = true;
        return result;
      }
      in_working[static_cast<size_t>(working[static_cast<size_t>(drop)])] = false;
      working.erase(working.begin() + drop);
      continue;
    }

    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_working[static_cast<size_t>(i)]) continue;
      const double rate = qp.rows.row(i).dot(step);
      if (rate >= -1e-15 * (1.0 + qp.rows.row(i).lpNorm<Eigen::Infinity>())) continue;
      const double slack = std::max(0.0, qp.rows.row(i).dot(result.x) - qp.rhs[i]);
      const double limit = slack / -rate;
      if (limit < alpha) {
        alpha = limit;
        blocking = i;
      }
    }
    result.x += alpha * step;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[static_cast<size_t>(blocking)] = true;
    }
  }
  return result;
}

QpResult solve_qp(const QpProblem& qp) {
  const Eigen::Index n = qp.dimension();
  const Eigen::Index m = qp.n_constraints();
  if (qp.hessian.rows() != n || qp.lower.size() != n || qp.upper.size() != n ||
      (m > 0 && qp.jacobian.cols() != n) || qp.jacobian.rows() != m) {
    throw std::invalid_argument("solve_qp: inconsistent dimensions");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (qp.lower[i] > 0.0 || qp.upper[i] < 0.0) {
      throw std::invalid_argument("solve_qp: step box must contain zero");
    }
  }

  bool needs_relaxation = false;
  for (Eigen::Index i = 0; i < m; ++i) needs_relaxation |= qp.offset[i] < 0.0;
  const Eigen::Index nv = needs_relaxation ? n + 1 : n;

  // Row layout: general constraints, then finite lower bounds, then finite
  // upper bounds, then (when relaxing) 0 <= delta <= 1.
  std::vector<Eigen::Index> lower_rows;
  std::vector<Eigen::Index> upper_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (qp.lower[i] > -kInf) lower_rows.push_back(i);
    if (qp.upper[i] < kInf) upper_rows.push_back(i);
  }
  const Eigen::Index n_rows = m + static_cast<Eigen::Index>(lower_rows.size() + upper_rows.size()) +
                              (needs_relaxation ? 2 : 0);
  ActiveSetQp as;
  as.hessian = Matrix::Zero(nv, nv);
  as.hessian.topLeftCorner(n, n) = qp.hessian;
  as.gradient = Vector::Zero(nv);
  as.gradient.head(n) = qp.gradient;
  as.rows = Matrix::Zero(n_rows, nv);
  as.rhs = Vector::Zero(n_rows);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < m; ++i, ++r) {
    as.rows.row(r).head(n) = qp.jacobian.row(i);
    as.rhs[r] = -qp.offset[i];
    if (needs_relaxation && qp.offset[i] < 0.0) as.rows(r, n) = -qp.offset[i];
  }
  for (Eigen::Index i : lower_rows) {
    as.rows(r, i) = 1.0;
    as.rhs[r++] = qp.lower[i];
  }
  for (Eigen::Index i : upper_rows) {
    as.rows(r, i) = -1.0;
    as.rhs[r++] = -qp.upper[i];
  }
  Vector start = Vector::Zero(nv);
  if (needs_relaxation) {
    as.rows(r, n) = 1.0;
    as.rhs[r++] = 0.0;
    as.rows(r, n) = -1.0;
    as.rhs[r++] = -1.0;
    start[n] = 1.0;
    as.hessian(n, n) = 1.0;
  }

  QpResult result;
  ActiveSetResult solved;
  // Elastic mode: a linear penalty on delta is exact once it exceeds the
  // multipliers of the unrelaxed problem, so escalate until delta leaves or
  // the penalty saturates.
  const Eigen::Index delta_floor_row = r - 2;
  double penalty = 100.0 * (1.0 + qp.gradient.lpNorm<Eigen::Infinity>());
  for (int attempt = 0;; ++attempt) {
    if (needs_relaxation) as.gradient[n] = penalty;
    solved = solve_active_set(as, start, 0);
    result.iterations += solved.iterations;
    if (!needs_relaxation) break;
    const bool at_floor = std::find(solved.active_rows.begin(), solved.active_rows.end(),
                                    delta_floor_row) != solved.active_rows.end();
    if (at_floor) solved.x[n] = 0.0;
    if (at_floor || !solved.converged || attempt >= 5) break;
    penalty *= 100.0;
  }

  result.step = solved.x.head(n);
  result.multipliers = solved.multipliers.head(m);
  result.lower_multipliers = Vector::Zero(n);
  result.upper_multipliers = Vector::Zero(n);
  r = m;
  for (Eigen::Index i : lower_rows) result.lower_multipliers[i] = solved.multipliers[r++];
  for (Eigen::Index i : upper_rows) result.upper_multipliers[i] = solved.multipliers[r++];
  result.relaxation = needs_relaxation ? std::clamp(solved.x[n], 0.0, 1.0) : 0.0;

  if (!solved.converged) {
    result.status = QpStatus::iteration_limit;
  } else if (result.relaxation == 0.0) {
    result.status = QpStatus::optimal;
  } else if (result.relaxation >= 1.0 - 1e-9) {
    result.status = QpStatus::infeasible;
  } else {
    result.status = QpStatus::relaxed;
  }
  return result;
}

}  // namespace rsmalab
