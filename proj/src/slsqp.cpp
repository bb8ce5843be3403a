#include "rsmalab/slsqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace rsmalab {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 20;

struct LocalModel {
  double f = 0.0;
  Vector grad;
  Vector g;      // constraint values
  Matrix jac;    // m x n
};

LocalModel evaluate_model(const NlpProblem& p, const Vector& x, double h) {
  LocalModel model;
  const auto m = static_cast<Eigen::Index>(p.constraints.size());
  model.f = p.objective(x);
  model.grad = p.objective_gradient ? p.objective_gradient(x)
                                    : finite_difference_gradient(p.objective, x, h, p.lower, p.upper);
  model.g.resize(m);
  model.jac.resize(m, x.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& c = p.constraints[static_cast<size_t>(i)];
    model.g[i] = c.value(x);
    model.jac.row(i) = c.gradient ? c.gradient(x)
                                  : finite_difference_gradient(c.value, x, h, p.lower, p.upper);
  }
  return model;
}

double violation(const Vector& g) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) v = std::max(v, -g[i]);
  return v;
}

QpProblem model_to_qp(const NlpProblem& p, const LocalModel& model, const Vector& x,
                      const Matrix& hessian) {
  QpProblem qp;
  qp.hessian = hessian;
  qp.gradient = model.grad;
  qp.jacobian = model.jac;
  qp.offset = model.g;
  qp.lower = (p.lower - x).cwiseMin(0.0);
  qp.upper = (p.upper - x).cwiseMax(0.0);
  return qp;
}

Vector lagrangian_gradient(const LocalModel& model, const Vector& multipliers) {
  Vector grad = model.grad;
  if (multipliers.size() > 0) grad -= model.jac.transpose() * multipliers;
  return grad;
}

void write_trace(std::ostream& out, int iteration, const Vector& x, double merit, double alpha,
                 double step_norm, double viol) {
  nlohmann::json rec;
  rec["iteration"] = iteration;
  rec["x"] = std::vector<double>(x.data(), x.data() + x.size());
  rec["merit"] = merit;
  rec["alpha"] = alpha;
  rec["step_norm"] = step_norm;
  rec["violation"] = viol;
  out << rec.dump() << '\n';
}

}  // namespace

std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iter: return "max_iter";
    case SolverStatus::line_search_failure: return "line_search_failure";
    case SolverStatus::infeasible_subproblem: return "infeasible_subproblem";
  }
  return "unknown";
}

void NlpProblem::validate() const {
  if (dimension < 1) throw std::invalid_argument("nlp: dimension must be >= 1");
  if (!objective) throw std::invalid_argument("nlp: objective missing");
  if (lower.size() != dimension || upper.size() != dimension) {
    throw std::invalid_argument("nlp: bounds must have one entry per coordinate");
  }
  for (int i = 0; i < dimension; ++i) {
    if (!(lower[i] <= upper[i])) throw std::invalid_argument("nlp: lower bound exceeds upper bound");
  }
  for (const auto& c : constraints) {
    if (!c.value) throw std::invalid_argument("nlp: constraint without value function");
  }
}

void SolverOptions::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("solver: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("solver: tolerance must be > 0");
  if (!(gradient_step > 0.0)) throw std::invalid_argument("solver: gradient_step must be > 0");
  if (!(merit_penalty_init >= 0.0)) throw std::invalid_argument("solver: penalty must be >= 0");
}

Vector finite_difference_gradient(const ScalarFunction& f, const Vector& x, double h,
                                  const Vector& lower, const Vector& upper) {
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const bool room_below = xi - h >= lower[i];
    const bool room_above = xi + h <= upper[i];
    if (room_below && room_above) {
      probe[i] = xi + h;
      const double fp = f(probe);
      probe[i] = xi - h;
      const double fm = f(probe);
      grad[i] = (fp - fm) / (2.0 * h);
    } else if (room_above) {
      probe[i] = xi + h;
      const double fp = f(probe);
      probe[i] = xi;
      grad[i] = (fp - f(probe)) / h;
    } else if (room_below) {
      probe[i] = xi - h;
      const double fm = f(probe);
      probe[i] = xi;
      grad[i] = (f(probe) - fm) / h;
    } else {
      grad[i] = 0.0;  // box narrower than the stencil
    }
    probe[i] = xi;
  }
  return grad;
}

QpProblem build_qp_subproblem(const NlpProblem& problem, const Vector& x, const Matrix& hessian,
                              double gradient_step) {
  return model_to_qp(problem, evaluate_model(problem, x, gradient_step), x, hessian);
}

double l1_merit(const NlpProblem& problem, const Vector& x, const Vector& penalties) {
  double merit = problem.objective(x);
  for (size_t i = 0; i < problem.constraints.size(); ++i) {
    merit += penalties[static_cast<Eigen::Index>(i)] *
             std::max(0.0, -problem.constraints[i].value(x));
  }
  return merit;
}

LineSearchResult line_search_l1(const NlpProblem& problem, const Vector& penalties, const Vector& x,
                                const Vector& step, double slope) {
  LineSearchResult result;
  const double merit0 = l1_merit(problem, x, penalties);
  const double predicted = std::min(slope, 0.0);
  double alpha = 1.0;
  for (int halving = 0; halving <= kMaxHalvings; ++halving) {
    const Vector trial = (x + alpha * step).cwiseMax(problem.lower).cwiseMin(problem.upper);
    const double merit = l1_merit(problem, trial, penalties);
    const bool decreased = predicted < 0.0 ? merit <= merit0 + kArmijo * alpha * predicted &&
                                                 merit < merit0
                                           : merit < merit0;
    if (std::isfinite(merit) && decreased) {
      result.alpha = alpha;
      result.merit = merit;
      result.success = true;
      result.halvings = halving;
      return result;
    }
    alpha *= 0.5;
  }
  result.halvings = kMaxHalvings;
  result.merit = merit0;
  return result;
}

Matrix bfgs_update(const Matrix& hessian, const Vector& s, const Vector& y) {
  if (s.norm() < 1e-14) return hessian;
  const Vector as = hessian * s;
  const double sas = s.dot(as);
  if (!(sas > 0.0)) return hessian;
  const double sy = s.dot(y);
  double theta = 1.0;
  if (sy < 0.2 * sas) theta = 0.8 * sas / (sas - sy);
  const Vector r = theta * y + (1.0 - theta) * as;
  const double sr = s.dot(r);
  Matrix updated = hessian - (as * as.transpose()) / sas + (r * r.transpose()) / sr;
  return 0.5 * (updated + updated.transpose());
}

NlpSolution solve(const NlpProblem& problem, Vector x0, const SolverOptions& options) {
  problem.validate();
  options.validate();
  if (x0.size() != problem.dimension) throw std::invalid_argument("solve: x0 has wrong dimension");

  NlpSolution solution;
  const Vector projected = x0.cwiseMax(problem.lower).cwiseMin(problem.upper);
  solution.start_projected = (projected - x0).lpNorm<Eigen::Infinity>() > 0.0;
  Vector x = projected;

  const auto m = static_cast<Eigen::Index>(problem.constraints.size());
  const double h = options.gradient_step;
  Matrix hessian = Matrix::Identity(problem.dimension, problem.dimension);
  Vector penalties = Vector::Constant(m, options.merit_penalty_init);
  LocalModel model = evaluate_model(problem, x, h);
  solution.status = SolverStatus::max_iter;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    solution.iterations = iter;
    const QpResult qp = solve_qp(model_to_qp(problem, model, x, hessian));
    if (qp.status == QpStatus::infeasible) {
      solution.status = SolverStatus::infeasible_subproblem;
      break;
    }
    const Vector& d = qp.step;
    const double viol = violation(model.g);
    const double step_norm = d.lpNorm<Eigen::Infinity>();
    if (step_norm <= options.tolerance && viol <= options.tolerance) {
      solution.status = SolverStatus::converged;
      break;
    }

    for (Eigen::Index i = 0; i < m; ++i) {
      const double lam = std::abs(qp.multipliers[i]);
      penalties[i] = std::max(lam, 0.5 * (penalties[i] + lam));
    }
    double infeasibility = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) infeasibility += penalties[i] * std::max(0.0, -model.g[i]);
    const double slope = model.grad.dot(d) - (1.0 - qp.relaxation) * infeasibility;

    const LineSearchResult ls = line_search_l1(problem, penalties, x, d, slope);
    if (!ls.success) {
      // Below the rounding floor of the merit function no further decrease is
      // observable; a feasible point there is as converged as it gets.
      const double merit_scale = 1.0 + std::abs(model.f);
      if (viol <= options.tolerance && std::abs(slope) <= 1e-13 * merit_scale) {
        solution.status = SolverStatus::converged;
      } else {
        solution.status = SolverStatus::line_search_failure;
      }
      break;
    }

    const Vector x_next = (x + ls.alpha * d).cwiseMax(problem.lower).cwiseMin(problem.upper);
    LocalModel next = evaluate_model(problem, x_next, h);
    const Vector s = x_next - x;
    const Vector y = lagrangian_gradient(next, qp.multipliers) -
                     lagrangian_gradient(model, qp.multipliers);
    hessian = bfgs_update(hessian, s, y);
#ifndef NDEBUG
    {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian, Eigen::EigenvaluesOnly);
      if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw std::logic_error("slsqp: quasi-Newton matrix lost positive definiteness");
      }
    }
#endif
    x = x_next;
    model = std::move(next);
    if (options.trace) {
      write_trace(*options.trace, iter, x, ls.merit, ls.alpha, step_norm, violation(model.g));
    }
  }

  solution.x = x;
  solution.objective_value = model.f;
  solution.max_constraint_violation = violation(model.g);
  if (solution.status == SolverStatus::converged &&
      solution.max_constraint_violation > options.tolerance) {
    solution.status = SolverStatus::max_iter;
  }
  return solution;
}

}  // namespace rsmalab
