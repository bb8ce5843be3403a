#include "rsmalab/solver_corpus.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace rsmalab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

NlpProblem free_problem(int n) {
  NlpProblem p;
  p.dimension = n;
  p.lower = Vector::Constant(n, -kInf);
  p.upper = Vector::Constant(n, kInf);
  return p;
}

CorpusProblem active_bound_quadratic() {
  CorpusProblem c{"active_bound_quadratic", free_problem(1), vec({5.0}), 4.0, vec({2.0})};
  c.problem.objective = [](const Vector& x) { return x[0] * x[0]; };
  c.problem.objective_gradient = [](const Vector& x) { return vec({2.0 * x[0]}); };
  c.problem.constraints.push_back({[](const Vector& x) { return x[0] - 2.0; },
                                   [](const Vector&) { return vec({1.0}); }});
  return c;
}

CorpusProblem rosenbrock() {
  CorpusProblem c{"rosenbrock", free_problem(2), vec({-1.2, 1.0}), 0.0, vec({1.0, 1.0})};
  c.problem.objective = [](const Vector& x) {
    return std::pow(1.0 - x[0], 2) + 100.0 * std::pow(x[1] - x[0] * x[0], 2);
  };
  c.problem.objective_gradient = [](const Vector& x) {
    const double r = x[1] - x[0] * x[0];
    return vec({-2.0 * (1.0 - x[0]) - 400.0 * x[0] * r, 200.0 * r});
  };
  return c;
}

CorpusProblem water_filling() {
  CorpusProblem c{"symmetric_water_filling", free_problem(2), vec({1.0, 1.0}),
                  -2.0 * std::log2(3.0), vec({2.0, 2.0})};
  c.problem.lower = vec({0.0, 0.0});
  c.problem.objective = [](const Vector& x) { return -std::log2(1.0 + x[0]) - std::log2(1.0 + x[1]); };
  c.problem.objective_gradient = [](const Vector& x) {
    return vec({-1.0 / ((1.0 + x[0]) * std::numbers::ln2), -1.0 / ((1.0 + x[1]) * std::numbers::ln2)});
  };
  c.problem.constraints.push_back({[](const Vector& x) { return 4.0 - x[0] - x[1]; },
                                   [](const Vector&) { return vec({-1.0, -1.0}); }});
  return c;
}

CorpusProblem half_plane_qp() {
  CorpusProblem c{"half_plane_qp", free_problem(2), vec({2.0, -1.0}), 0.25, vec({0.5, 0.5})};
  c.problem.objective = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  c.problem.objective_gradient = [](const Vector& x) { return Vector(x); };
  c.problem.constraints.push_back({[](const Vector& x) { return x[0] + x[1] - 1.0; },
                                   [](const Vector&) { return vec({1.0, 1.0}); }});
  return c;
}

CorpusProblem boxed_quadratic() {
  CorpusProblem c{"boxed_quadratic", free_problem(2), vec({1.0, 2.0}), 2.0, vec({2.0, 0.0})};
  c.problem.lower = vec({0.0, 0.0});
  c.problem.upper = vec({2.0, 5.0});
  c.problem.objective = [](const Vector& x) {
    return std::pow(x[0] - 3.0, 2) + std::pow(x[1] + 1.0, 2);
  };
  c.problem.objective_gradient = [](const Vector& x) {
    return vec({2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)});
  };
  return c;
}

CorpusProblem disc_linear() {
  CorpusProblem c{"linear_over_disc", free_problem(2), vec({0.5, 0.2}), -2.0, vec({-1.0, -1.0})};
  c.problem.objective = [](const Vector& x) { return x[0] + x[1]; };
  c.problem.objective_gradient = [](const Vector&) { return vec({1.0, 1.0}); };
  c.problem.constraints.push_back({[](const Vector& x) { return 2.0 - x.squaredNorm(); },
                                   [](const Vector& x) { return Vector(-2.0 * x); }});
  return c;
}

CorpusProblem log_barrier_simplex() {
  CorpusProblem c{"log_concave_simplex", free_problem(3), vec({0.5, 1.5, 0.2}), 0.0,
                  vec({1.0, 1.0, 1.0})};
  c.problem.lower = Vector::Constant(3, 1e-3);
  c.problem.objective = [](const Vector& x) {
    return -std::log(x[0]) - std::log(x[1]) - std::log(x[2]);
  };
  c.problem.objective_gradient = [](const Vector& x) {
    return vec({-1.0 / x[0], -1.0 / x[1], -1.0 / x[2]});
  };
  c.problem.constraints.push_back({[](const Vector& x) { return 3.0 - x.sum(); },
                                   [](const Vector&) { return vec({-1.0, -1.0, -1.0}); }});
  return c;
}

// Hock-Schittkowski #21
CorpusProblem hs21() {
  CorpusProblem c{"hs21", free_problem(2), vec({-1.0, -1.0}), -99.96, vec({2.0, 0.0})};
  c.problem.lower = vec({2.0, -50.0});
  c.problem.upper = vec({50.0, 50.0});
  c.problem.objective = [](const Vector& x) { return 0.01 * x[0] * x[0] + x[1] * x[1] - 100.0; };
  c.problem.objective_gradient = [](const Vector& x) { return vec({0.02 * x[0], 2.0 * x[1]}); };
  c.problem.constraints.push_back({[](const Vector& x) { return 10.0 * x[0] - x[1] - 10.0; },
                                   [](const Vector&) { return vec({10.0, -1.0}); }});
  return c;
}

// Hock-Schittkowski #35
CorpusProblem hs35() {
  CorpusProblem c{"hs35", free_problem(3), vec({0.5, 0.5, 0.5}), 1.0 / 9.0,
                  vec({4.0 / 3.0, 7.0 / 9.0, 4.0 / 9.0})};
  c.problem.lower = Vector::Zero(3);
  c.problem.objective = [](const Vector& x) {
    return 9.0 - 8.0 * x[0] - 6.0 * x[1] - 4.0 * x[2] + 2.0 * x[0] * x[0] + 2.0 * x[1] * x[1] +
           x[2] * x[2] + 2.0 * x[0] * x[1] + 2.0 * x[0] * x[2];
  };
  c.problem.objective_gradient = [](const Vector& x) {
    return vec({-8.0 + 4.0 * x[0] + 2.0 * x[1] + 2.0 * x[2], -6.0 + 4.0 * x[1] + 2.0 * x[0],
                -4.0 + 2.0 * x[2] + 2.0 * x[0]});
  };
  c.problem.constraints.push_back({[](const Vector& x) { return 3.0 - x[0] - x[1] - 2.0 * x[2]; },
                                   [](const Vector&) { return vec({-1.0, -1.0, -2.0}); }});
  return c;
}

// Hock-Schittkowski #76
CorpusProblem hs76() {
  CorpusProblem c{"hs76", free_problem(4), vec({0.5, 0.5, 0.5, 0.5}), -4.681818181818182,
                  vec({3.0 / 11.0, 23.0 / 11.0, 0.0, 6.0 / 11.0})};
  c.problem.lower = Vector::Zero(4);
  c.problem.objective = [](const Vector& x) {
    return x[0] * x[0] + 0.5 * x[1] * x[1] + x[2] * x[2] + 0.5 * x[3] * x[3] - x[0] * x[2] +
           x[2] * x[3] - x[0] - 3.0 * x[1] + x[2] - x[3];
  };
  c.problem.objective_gradient = [](const Vector& x) {
    return vec({2.0 * x[0] - x[2] - 1.0, x[1] - 3.0, 2.0 * x[2] - x[0] + x[3] + 1.0,
                x[3] + x[2] - 1.0});
  };
  c.problem.constraints.push_back(
      {[](const Vector& x) { return 5.0 - x[0] - 2.0 * x[1] - x[2] - x[3]; },
       [](const Vector&) { return vec({-1.0, -2.0, -1.0, -1.0}); }});
  c.problem.constraints.push_back(
      {[](const Vector& x) { return 4.0 - 3.0 * x[0] - x[1] - 2.0 * x[2] + x[3]; },
       [](const Vector&) { return vec({-3.0, -1.0, -2.0, 1.0}); }});
  c.problem.constraints.push_back({[](const Vector& x) { return x[1] + 4.0 * x[2] - 1.5; },
                                   [](const Vector&) { return vec({0.0, 1.0, 4.0, 0.0}); }});
  return c;
}

}  // namespace

std::vector<CorpusProblem> regression_corpus() {
  return {active_bound_quadratic(), rosenbrock(), water_filling(), half_plane_qp(),
          boxed_quadratic(),        disc_linear(), log_barrier_simplex(), hs21(),
          hs35(),                   hs76()};
}

NlpProblem without_gradients(NlpProblem problem) {
  problem.objective_gradient = nullptr;
  for (auto& c : problem.constraints) c.gradient = nullptr;
  return problem;
}

}  // namespace rsmalab
