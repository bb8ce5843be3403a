#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rsmalab/random.hpp"
#include "rsmalab/slsqp.hpp"
#include "rsmalab/solver_corpus.hpp"

using namespace rsmalab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NlpProblem unconstrained(int n) {
  NlpProblem p;
  p.dimension = n;
  p.lower = Vector::Constant(n, -kInf);
  p.upper = Vector::Constant(n, kInf);
  return p;
}

}  // namespace

TEST_CASE("regression corpus reaches known optima with analytic and numeric gradients") {
  for (const auto& c : regression_corpus()) {
    CAPTURE(c.name);
    for (bool numeric : {false, true}) {
      CAPTURE(numeric);
      const NlpProblem p = numeric ? without_gradients(c.problem) : c.problem;
      const NlpSolution s = solve(p, c.start);
      CHECK(s.status == SolverStatus::converged);
      CHECK(std::abs(s.objective_value - c.optimal_value) <= 1e-5);
      CHECK(s.max_constraint_violation <= 1e-8);
      CHECK((s.x - c.optimal_point).lpNorm<Eigen::Infinity>() <= 1e-4);
    }
  }
}

TEST_CASE("spelled-out corpus examples") {
  const auto corpus = regression_corpus();
  const NlpSolution bound = solve(corpus[0].problem, corpus[0].start);
  CHECK(bound.x[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(bound.objective_value == doctest::Approx(4.0).epsilon(1e-10));

  const NlpSolution rosen = solve(without_gradients(corpus[1].problem), corpus[1].start);
  CHECK(std::abs(rosen.x[0] - 1.0) <= 1e-6);
  CHECK(std::abs(rosen.x[1] - 1.0) <= 1e-6);

  const NlpSolution wf = solve(without_gradients(corpus[2].problem), corpus[2].start);
  CHECK(std::abs(wf.x[0] - 2.0) <= 1e-6);
  CHECK(std::abs(wf.x[1] - 2.0) <= 1e-6);
}

TEST_CASE("water-filling optimum agrees with a 1-D grid search") {
  // On the active budget x + y = 4 the objective is one-dimensional.
  double best_x = 0.0;
  double best = -kInf;
  for (int i = 0; i <= 400000; ++i) {
    const double x = 4.0 * i / 400000.0;
    const double v = std::log2(1.0 + x) + std::log2(5.0 - x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  CHECK(best_x == doctest::Approx(2.0).epsilon(1e-5));
  const auto corpus = regression_corpus();
  CHECK(-corpus[2].optimal_value == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("finite differences agree with analytic gradients on the corpus") {
  RandomStream rng(12);
  for (const auto& c : regression_corpus()) {
    CAPTURE(c.name);
    for (int trial = 0; trial < 5; ++trial) {
      Vector x = c.start;
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += rng.uniform(-0.1, 0.1);
      x = x.cwiseMax(c.problem.lower).cwiseMin(c.problem.upper);
      auto compare = [&](const ScalarFunction& f, const GradientFunction& g) {
        const Vector fd = finite_difference_gradient(f, x, 1e-6, c.problem.lower, c.problem.upper);
        const Vector exact = g(x);
        CHECK((fd - exact).norm() <= 1e-4 * std::max(1.0, exact.norm()));
      };
      compare(c.problem.objective, c.problem.objective_gradient);
      for (const auto& con : c.problem.constraints) compare(con.value, con.gradient);
    }
  }
}

TEST_CASE("finite differences stay inside the box") {
  NlpProblem p = unconstrained(1);
  p.lower[0] = 0.0;
  p.upper[0] = 1.0;
  auto f = [](const Vector& x) {
    REQUIRE(x[0] >= 0.0);
    REQUIRE(x[0] <= 1.0);
    return std::sqrt(x[0]) + x[0];
  };
  Vector x(1);
  x[0] = 0.0;
  CHECK(finite_difference_gradient(f, x, 1e-6, p.lower, p.upper)[0] > 100.0);
  x[0] = 1.0;
  CHECK(finite_difference_gradient(f, x, 1e-6, p.lower, p.upper)[0] == doctest::Approx(1.5).epsilon(1e-5));
}

TEST_CASE("QP subproblem: Newton step is exact on quadratics") {
  // f = (x-1)^2 + 2 (y+2)^2 + x y, constrained by x + y <= -1
  NlpProblem p = unconstrained(2);
  p.objective = [](const Vector& x) {
    return std::pow(x[0] - 1.0, 2) + 2.0 * std::pow(x[1] + 2.0, 2) + x[0] * x[1];
  };
  p.constraints.push_back({[](const Vector& x) { return -1.0 - x[0] - x[1]; }, nullptr});
  Matrix hess(2, 2);
  hess << 2.0, 1.0, 1.0, 4.0;
  Vector x0(2);
  x0 << 3.0, 3.0;
  const QpResult qp = solve_qp(build_qp_subproblem(p, x0, hess));
  const Vector x1 = x0 + qp.step;
  // KKT of the original problem at x1: gradient = -lambda * (-1, -1)
  Vector grad(2);
  grad << 2.0 * (x1[0] - 1.0) + x1[1], 4.0 * (x1[1] + 2.0) + x1[0];
  CHECK(-1.0 - x1[0] - x1[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  CHECK(grad[0] == doctest::Approx(grad[1]).epsilon(1e-6));
  CHECK(grad[0] < 0.0);
  CHECK(qp.multipliers[0] == doctest::Approx(-grad[0]).epsilon(1e-6));
}

TEST_CASE("QP subproblem: stationary point with slack constraint gives a zero step") {
  NlpProblem p = unconstrained(2);
  p.objective = [](const Vector& x) { return x.squaredNorm(); };
  p.constraints.push_back({[](const Vector& x) { return 1.0 + x[0]; }, nullptr});
  const QpResult qp = solve_qp(build_qp_subproblem(p, Vector::Zero(2), Matrix::Identity(2, 2)));
  CHECK(qp.step.norm() <= 1e-9);
}

TEST_CASE("QP subproblem: linear objective with identity model") {
  NlpProblem p = unconstrained(3);
  Vector c(3);
  c << 1.0, -2.0, 3.0;
  p.objective = [c](const Vector& x) { return c.dot(x); };
  const QpResult qp = solve_qp(build_qp_subproblem(p, Vector::Zero(3), Matrix::Identity(3, 3)));
  CHECK((qp.step + c).norm() <= 1e-8);
}

TEST_CASE("line search accepts the full Newton step on a quadratic") {
  NlpProblem p = unconstrained(2);
  p.objective = [](const Vector& x) { return x[0] * x[0] + 3.0 * x[1] * x[1]; };
  Vector x(2);
  x << 1.0, -1.0;
  Vector d(2);
  d << -1.0, 1.0;
  const double slope = 2.0 * x[0] * d[0] + 6.0 * x[1] * d[1];
  const LineSearchResult ls = line_search_l1(p, Vector(), x, d, slope);
  CHECK(ls.success);
  CHECK(ls.alpha == 1.0);
  CHECK(ls.merit == 0.0);
}

TEST_CASE("line search fails on an ascent direction") {
  NlpProblem p = unconstrained(2);
  p.objective = [](const Vector& x) { return x.squaredNorm(); };
  p.constraints.push_back({[](const Vector& x) { return 10.0 - x[0]; }, nullptr});
  Vector x(2);
  x << 1.0, 1.0;
  Vector d(2);
  d << 1.0, 1.0;
  const LineSearchResult ls = line_search_l1(p, Vector::Ones(1), x, d, 4.0);
  CHECK_FALSE(ls.success);
  CHECK(ls.halvings == 20);
}

TEST_CASE("trace records one line per accepted step") {
  for (const auto& c : regression_corpus()) {
    CAPTURE(c.name);
    std::ostringstream trace;
    SolverOptions opts;
    opts.trace = &trace;
    const NlpSolution s = solve(without_gradients(c.problem), c.start, opts);
    CHECK(s.status == SolverStatus::converged);
    std::istringstream lines(trace.str());
    std::string line;
    int records = 0;
    while (std::getline(lines, line)) {
      const auto rec = nlohmann::json::parse(line);
      const double merit = rec["merit"].get<double>();
      const double alpha = rec["alpha"].get<double>();
      CHECK(alpha > 0.0);
      CHECK(alpha <= 1.0);
      const auto xs = rec["x"].get<std::vector<double>>();
      const Vector x = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
      CHECK(c.problem.objective(x) <= merit + 1e-12);
      ++records;
    }
    CHECK(records == s.iterations - (s.status == SolverStatus::converged ? 1 : 0));
  }
}

TEST_CASE("BFGS: closed-form rank-two update") {
  const Matrix a = Matrix::Identity(2, 2);
  const Vector s = Vector::Unit(2, 0);
  const Vector y = 2.0 * Vector::Unit(2, 0);
  const Matrix next = bfgs_update(a, s, y);
  Matrix expected(2, 2);
  expected << 2.0, 0.0, 0.0, 1.0;
  CHECK((next - expected).norm() <= 1e-15);
}

TEST_CASE("BFGS: damping inactive reproduces the classical formula") {
  RandomStream rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix l = Matrix::Random(3, 3);
    const Matrix a = l * l.transpose() + Matrix::Identity(3, 3);
    Vector s(3);
    for (int i = 0; i < 3; ++i) s[i] = rng.normal();
    const Vector y = a * s * 1.5;  // s^T y = 1.5 s^T A s
    const Matrix classical = a - (a * s) * (a * s).transpose() / s.dot(a * s) +
                             y * y.transpose() / s.dot(y);
    CHECK((bfgs_update(a, s, y) - classical).norm() <= 1e-10 * classical.norm());
  }
}

TEST_CASE("BFGS: Powell damping keeps the matrix positive definite") {
  RandomStream rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix a = Matrix::Identity(4, 4);
    for (int step = 0; step < 10; ++step) {
      Vector s(4);
      Vector y(4);
      for (int i = 0; i < 4; ++i) {
        s[i] = rng.normal();
        y[i] = rng.normal();  // arbitrary sign of s^T y
      }
      a = bfgs_update(a, s, y);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
      CHECK((a - a.transpose()).norm() == 0.0);
    }
  }
}

TEST_CASE("BFGS: negligible step leaves the matrix unchanged") {
  const Matrix a = 2.0 * Matrix::Identity(2, 2);
  CHECK(bfgs_update(a, Vector::Constant(2, 1e-16), Vector::Ones(2)) == a);
}

TEST_CASE("BFGS: conjugate steps recover the Hessian of a quadratic") {
  Matrix q(2, 2);
  q << 3.0, 1.0, 1.0, 2.0;
  Vector s1(2);
  s1 << 1.0, 0.3;
  // s2 is Q-conjugate to s1
  Vector s2(2);
  const Vector qs1 = q * s1;
  s2 << -qs1[1], qs1[0];
  Matrix a = Matrix::Identity(2, 2);
  a = bfgs_update(a, s1, q * s1);
  a = bfgs_update(a, s2, q * s2);
  CHECK((a - q).norm() <= 1e-12);
}

TEST_CASE("start point outside the box is projected and recorded") {
  auto corpus = regression_corpus();
  const auto& c = corpus[4];  // boxed quadratic
  Vector start(2);
  start << 10.0, -3.0;
  const NlpSolution s = solve(c.problem, start);
  CHECK(s.start_projected);
  CHECK(s.status == SolverStatus::converged);
  CHECK(s.objective_value == doctest::Approx(2.0));
}

TEST_CASE("iteration cap and option validation") {
  auto corpus = regression_corpus();
  SolverOptions opts;
  opts.max_iterations = 2;
  const NlpSolution s = solve(corpus[1].problem, corpus[1].start, opts);
  CHECK(s.status == SolverStatus::max_iter);
  CHECK(s.iterations == 2);
  opts.max_iterations = 0;
  CHECK_THROWS_AS(solve(corpus[1].problem, corpus[1].start, opts), std::invalid_argument);
  opts = {};
  opts.tolerance = 0.0;
  CHECK_THROWS_AS(solve(corpus[1].problem, corpus[1].start, opts), std::invalid_argument);
}

TEST_CASE("an infeasible linearization is reported") {
  // x >= 1 and x <= 0 cannot both hold; the relaxed subproblem cannot move.
  NlpProblem p = unconstrained(1);
  p.upper[0] = 0.0;
  p.objective = [](const Vector& x) { return x[0]; };
  p.constraints.push_back({[](const Vector& x) { return x[0] - 1.0; }, nullptr});
  Vector x0(1);
  x0 << 0.0;
  CHECK(solve(p, x0).status == SolverStatus::infeasible_subproblem);
}
