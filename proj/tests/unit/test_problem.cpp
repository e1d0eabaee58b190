#include <doctest.h>

#include <cmath>
#include <cstring>

#include "ags/dejong.hpp"
#include "ags/problem.hpp"
#include "ags/rng.hpp"
#include "toy_problems.hpp"

using namespace ags;

TEST_CASE("evaluate_objective rejects NaN and wrong dimension") {
  const dejong::DeJongProblem p(0.0);
  Vector x(2);
  x << -32, 32;
  CHECK(p.evaluate_objective(x) == doctest::Approx(0.997397).epsilon(1e-5));
  x[0] = std::nan("");
  CHECK_THROWS_AS(p.evaluate_objective(x), InvalidInput);
  CHECK_THROWS_AS(p.evaluate_objective(Vector::Zero(3)), InvalidInput);
  CHECK_THROWS_AS(p.evaluate_constraints(Vector::Zero(1)), InvalidInput);
}

TEST_CASE("evaluations are pure") {
  const dejong::DeJongProblem p(0.3);
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Vector x(2);
    x << rng.uniform(-50, 50), rng.uniform(-50, 50);
    const double a = p.evaluate_objective(x);
    const double b = p.evaluate_objective(x);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
}

TEST_CASE("sample_uniform_init stays in bounds and is deterministic") {
  const test::SphereWithLine p;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Vector x = p.sample_uniform_init(seed);
    REQUIRE(p.bounds().contains(x));
  }
  CHECK(p.sample_uniform_init(42) == p.sample_uniform_init(42));
  CHECK(p.sample_uniform_init(42) != p.sample_uniform_init(43));
}

TEST_CASE("unbounded coordinates cannot be sampled") {
  const test::Unbounded p;
  CHECK_THROWS_AS(p.sample_uniform_init(1), InvalidInput);
}

TEST_CASE("finite differences") {
  auto f = [](const Vector& x) { return x[0] * x[1]; };
  Vector x(2);
  x << 2, 3;
  const Vector g = finite_diff_gradient(f, x, 1e-5);
  CHECK(std::abs(g[0] - 3.0) < 1e-8);
  CHECK(std::abs(g[1] - 2.0) < 1e-8);
  CHECK_THROWS_AS(finite_diff_gradient(f, x, 0.0), InvalidInput);

  // second-order convergence on a smooth nonpolynomial function
  auto h = [](const Vector& v) { return std::sin(v[0]) * std::exp(v[1]); };
  Vector y(2);
  y << 0.4, 0.3;
  const double exact = std::cos(0.4) * std::exp(0.3);
  const double e1 = std::abs(finite_diff_gradient(h, y, 1e-2)[0] - exact);
  const double e2 = std::abs(finite_diff_gradient(h, y, 5e-3)[0] - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("rng streams") {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  Rng c(3);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = c.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("bounds reject inverted intervals") {
  CHECK_THROWS_AS(test::SphereWithLine(Vector::Constant(2, 1.0), Vector::Constant(2, -1.0)),
                  InvalidInput);
}
