#pragma once

#include <functional>
#include <ostream>
#include <string_view>
#include <vector>

#include "rsmalab/linalg.hpp"
#include "rsmalab/qp.hpp"

namespace rsmalab {

using ScalarFunction = std::function<double(const Vector&)>;
using GradientFunction = std::function<Vector(const Vector&)>;

/// g(x) >= 0. Without an analytic gradient, central differences are used.
struct InequalityConstraint {
  ScalarFunction value;
  GradientFunction gradient;
};

/// minimize f(x) s.t. g_m(x) >= 0, lower <= x <= upper.
/// Maximization is expressed by the caller as a negated objective.
struct NlpProblem {
  int dimension = 0;
  ScalarFunction objective;
  GradientFunction objective_gradient;
  std::vector<InequalityConstraint> constraints;
  Vector lower;
  Vector upper;

  void validate() const;
};

struct SolverOptions {
  int max_iterations = 100;
  double gradient_step = 1e-6;
  double tolerance = 1e-8;
  double merit_penalty_init = 1.0;
  /// When set, one JSON object per iteration (x, merit, alpha, ...) is written here.
  std::ostream* trace = nullptr;

  void validate() const;
};

enum class SolverStatus { converged, max_iter, line_search_failure, infeasible_subproblem };

std::string_view to_string(SolverStatus status);

struct NlpSolution {
  Vector x;
  double objective_value = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::max_iter;
  double max_constraint_violation = 0.0;
  /// True when x0 had to be projected into the bounds.
  bool start_projected = false;
};

/// Gradient of `f` by central differences with step h, falling back to a
/// one-sided difference where a central stencil would leave [lower, upper].
Vector finite_difference_gradient(const ScalarFunction& f, const Vector& x, double h,
                                  const Vector& lower, const Vector& upper);

/// Quadratic model at x: min 1/2 d^T A d + grad f^T d s.t. grad g_m^T d + g_m >= 0
/// and lower - x <= d <= upper - x.
QpProblem build_qp_subproblem(const NlpProblem& problem, const Vector& x, const Matrix& hessian,
                              double gradient_step = 1e-6);

/// f(x) + sum_m rho_m max(0, -g_m(x)).
double l1_merit(const NlpProblem& problem, const Vector& x, const Vector& penalties);

struct LineSearchResult {
  double alpha = 0.0;
  double merit = 0.0;  // merit at the accepted point
  bool success = false;
  int halvings = 0;
};

/// Backtracking by halving from alpha = 1 on the L1 merit with an Armijo test
/// against the predicted directional derivative (`slope`, <= 0 for descent).
/// Gives up after 20 halvings.
LineSearchResult line_search_l1(const NlpProblem& problem, const Vector& penalties, const Vector& x,
                                const Vector& step, double slope);

/// Powell-damped BFGS update. Keeps A symmetric positive definite; returns A
/// unchanged when ||s|| < 1e-14.
Matrix bfgs_update(const Matrix& hessian, const Vector& s, const Vector& y);

NlpSolution solve(const NlpProblem& problem, Vector x0, const SolverOptions& options = {});

}  // namespace rsmalab
