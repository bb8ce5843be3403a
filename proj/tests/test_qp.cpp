#include <doctest.h>

#include <limits>

#include "oracles/qp_enumeration.hpp"
#include "rsmalab/qp.hpp"
#include "rsmalab/random.hpp"
#include "draws.hpp"

using namespace rsmalab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem unbounded(Eigen::Index n, Eigen::Index m) {
  QpProblem qp;
  qp.hessian = Matrix::Identity(n, n);
  qp.gradient = Vector::Zero(n);
  qp.jacobian = Matrix::Zero(m, n);
  qp.offset = Vector::Zero(m);
  qp.lower = Vector::Constant(n, -kInf);
  qp.upper = Vector::Constant(n, kInf);
  return qp;
}

}  // namespace

TEST_CASE("hand KKT: projection onto a half-plane") {
  QpProblem qp = unbounded(2, 1);
  qp.jacobian << 1.0, 1.0;
  qp.offset << -1.0;  // d1 + d2 >= 1
  const QpResult r = solve_qp(qp);
  CHECK(r.status == QpStatus::optimal);
  CHECK(r.step[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.step[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.multipliers[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("inactive constraint has zero multiplier") {
  QpProblem qp = unbounded(2, 1);
  qp.gradient << -1.0, 2.0;
  qp.jacobian << 1.0, 0.0;
  qp.offset << 10.0;  // d1 >= -10, far away
  const QpResult r = solve_qp(qp);
  CHECK(r.status == QpStatus::optimal);
  CHECK(r.step[0] == doctest::Approx(1.0));
  CHECK(r.step[1] == doctest::Approx(-2.0));
  CHECK(r.multipliers[0] == 0.0);
}

TEST_CASE("linear objective with identity model gives the steepest-descent step") {
  QpProblem qp = unbounded(3, 0);
  qp.gradient << 1.0, -2.0, 0.5;
  const QpResult r = solve_qp(qp);
  CHECK((r.step + qp.gradient).norm() < 1e-14);
}

TEST_CASE("bounds act as constraints with their own multipliers") {
  QpProblem qp = unbounded(2, 0);
  qp.gradient << -3.0, 3.0;
  qp.upper[0] = 1.0;
  qp.lower[1] = -0.5;
  const QpResult r = solve_qp(qp);
  CHECK(r.step[0] == doctest::Approx(1.0));
  CHECK(r.step[1] == doctest::Approx(-0.5));
  CHECK(r.upper_multipliers[0] == doctest::Approx(2.0));
  CHECK(r.lower_multipliers[1] == doctest::Approx(2.5));
}

TEST_CASE("inconsistent linearization is relaxed, hopeless one is infeasible") {
  QpProblem qp = unbounded(1, 1);
  qp.jacobian << 1.0;
  qp.offset << -1.0;  // d >= 1
  qp.upper[0] = 0.5;
  const QpResult relaxed = solve_qp(qp);
  CHECK(relaxed.status == QpStatus::relaxed);
  CHECK(relaxed.relaxation == doctest::Approx(0.5));
  CHECK(relaxed.step[0] == doctest::Approx(0.5));

  qp.upper[0] = 0.0;
  CHECK(solve_qp(qp).status == QpStatus::infeasible);
}

TEST_CASE("violated but consistent rows are solved exactly through elastic mode") {
  QpProblem qp = unbounded(2, 2);
  qp.gradient << 5.0, 5.0;
  qp.jacobian << 1.0, 0.0, 0.0, 1.0;
  qp.offset << -2.0, -1.0;  // d1 >= 2, d2 >= 1
  const QpResult r = solve_qp(qp);
  CHECK(r.status == QpStatus::optimal);
  CHECK(r.step[0] == doctest::Approx(2.0));
  CHECK(r.step[1] == doctest::Approx(1.0));
  CHECK(r.multipliers[0] == doctest::Approx(7.0));
  CHECK(r.multipliers[1] == doctest::Approx(6.0));
}

TEST_CASE("random 4-dim QPs agree with exhaustive active-set enumeration") {
  RandomStream rng(31337);
  int compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const QpProblem qp = testing::random_qp(rng);
    const auto reference = oracle::enumerate_active_sets(qp);
    REQUIRE(reference.has_value());
    const QpResult r = solve_qp(qp);
    REQUIRE(r.status == QpStatus::optimal);
    CHECK((r.step - reference->step).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK((r.multipliers - reference->multipliers).lpNorm<Eigen::Infinity>() <= 1e-7);
    // complementary slackness and dual feasibility
    const Vector slack = qp.jacobian * r.step + qp.offset;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      CHECK(r.multipliers[i] >= 0.0);
      CHECK(slack[i] >= -1e-10);
      CHECK(std::abs(r.multipliers[i] * slack[i]) <= 1e-8);
    }
    ++compared;
  }
  CHECK(compared == 100);
}
