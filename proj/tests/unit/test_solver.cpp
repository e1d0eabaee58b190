#include <doctest.h>

#include <cmath>

#include "ags/solver.hpp"
#include "toy_problems.hpp"

using namespace ags;

namespace {
ValueAndGradient sphere() {
  return [](const Vector& x, Vector* g) {
    if (g) *g = 2.0 * x;
    return x.squaredNorm();
  };
}
}  // namespace

TEST_CASE("bfgs on a quadratic") {
  Vector x0(2);
  x0 << 3, 4;
  const Bounds box{Vector::Constant(2, -10), Vector::Constant(2, 10)};
  const SolveResult r = bfgs_minimize(sphere(), x0, box, {});
  CHECK(r.converged);
  CHECK(r.x_star.norm() < 1e-8);
  CHECK(r.status == "converged");
}

TEST_CASE("bfgs stays in the box from a corner") {
  const Bounds box{Vector::Constant(2, 1), Vector::Constant(2, 2)};
  Vector x0(2);
  x0 << 2, 2;
  const SolveResult r = bfgs_minimize(sphere(), x0, box, {});
  CHECK(r.converged);
  CHECK(box.contains(r.x_star));
  CHECK(r.x_star[0] == 1.0);
  CHECK(r.x_star[1] == 1.0);
}

TEST_CASE("bfgs on Rosenbrock") {
  auto rosen = [](const Vector& x, Vector* g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    if (g) {
      (*g)[0] = -2 * a - 400 * x[0] * b;
      (*g)[1] = 200 * b;
    }
    return a * a + 100 * b * b;
  };
  Vector x0(2);
  x0 << -1.2, 1;
  const Bounds box{Vector::Constant(2, -5), Vector::Constant(2, 5)};
  const SolveResult r = bfgs_minimize(rosen, x0, box, {});
  CHECK(r.converged);
  CHECK((r.x_star - Vector::Ones(2)).norm() < 1e-6);
}

TEST_CASE("bfgs max_iter returns the best iterate unconverged") {
  BfgsOptions o;
  o.max_iter = 1;
  Vector x0(2);
  x0 << -1.2, 1;
  auto rosen = [](const Vector& x, Vector* g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    if (g) {
      (*g)[0] = -2 * a - 400 * x[0] * b;
      (*g)[1] = 200 * b;
    }
    return a * a + 100 * b * b;
  };
  const SolveResult r =
      bfgs_minimize(rosen, x0, {Vector::Constant(2, -5), Vector::Constant(2, 5)}, o);
  CHECK_FALSE(r.converged);
  CHECK(r.status == "max_iterations");
  CHECK(r.objective < 24.2);
}

TEST_CASE("augmented Lagrangian: analytic KKT example") {
  const test::ScalarKkt p;
  for (GradientSource src : {GradientSource::kAnalytic, GradientSource::kFiniteDifference}) {
    AugLagOptions o;
    o.gradient = src;
    // lambda = -2x at the inner optimum, so 1e-6 on lambda needs |c| < 5e-7
    o.tol_feas = 1e-7;
    const SolveResult r = augmented_lagrangian_solve(p, Vector::Constant(1, 4.0), o);
    CHECK(r.converged);
    CHECK(std::abs(r.x_star[0] - 1.0) < 1e-6);
    REQUIRE(r.multipliers.size() == 1);
    CHECK(std::abs(r.multipliers[0] + 2.0) < 1e-6);
  }
}

TEST_CASE("augmented Lagrangian: sphere on a line, deterministic, monotone feasibility") {
  const test::SphereWithLine p;
  Vector x0(2);
  x0 << 4, -3;
  const SolveResult a = augmented_lagrangian_solve(p, x0, {});
  const SolveResult b = augmented_lagrangian_solve(p, x0, {});
  CHECK(a.converged);
  CHECK(std::abs(a.x_star[0] - 0.5) < 1e-6);
  CHECK(std::abs(a.x_star[1] - 0.5) < 1e-6);
  CHECK(a.feasibility < 1e-6);
  CHECK(a.x_star == b.x_star);
  CHECK(a.iterations == b.iterations);
  for (std::size_t i = 1; i < a.accepted_feasibility.size(); ++i)
    CHECK(a.accepted_feasibility[i] <= 1.1 * a.accepted_feasibility[i - 1]);
}

TEST_CASE("augmented Lagrangian input validation") {
  const test::SphereWithLine p;
  CHECK_THROWS_AS(augmented_lagrangian_solve(p, Vector::Zero(3), {}), InvalidInput);
  Vector bad(2);
  bad << 1, std::nan("");
  CHECK_THROWS_AS(augmented_lagrangian_solve(p, bad, {}), InvalidInput);
}

TEST_CASE("clock modes") {
  CHECK(parse_clock_mode("work") == ClockMode::kWork);
  CHECK(parse_clock_mode("wall") == ClockMode::kWall);
  CHECK_THROWS_AS(parse_clock_mode("cpu"), InvalidInput);
  CHECK(to_string(ClockMode::kWall) == "wall");
}
