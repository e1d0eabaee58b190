#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ags/dejong.hpp"
#include "ags/log.hpp"
#include "ags/rng.hpp"

using namespace ags;
using namespace ags::dejong;

namespace {

// Straight transcription of the sum, kept independent of the library code.
double oracle_value(double x1, double x2, double alpha) {
  const double a1[8] = {-32, -32, -28, -28, 12, 12, 18, 18};
  const double a2[8] = {32, 28, 32, 28, -12, -18, -12, -18};
  double s = 0.002;
  for (int i = 0; i < 8; ++i) {
    const double b1 = std::cos(alpha) * a1[i] - std::sin(alpha) * a2[i];
    const double b2 = std::sin(alpha) * a1[i] + std::cos(alpha) * a2[i];
    s += 1.0 / (1.0 + std::pow(x1 - b1, 6) + std::pow(x2 - b2, 6));
  }
  return 1.0 / s;
}

}  // namespace

TEST_CASE("rotate_minima") {
  const MinimaMatrix m0 = rotate_minima(0.0);
  CHECK(m0.a_bar == m0.a);
  const MinimaMatrix m90 = rotate_minima(std::numbers::pi / 2);
  CHECK(m90.a_bar(0, 0) == doctest::Approx(-32.0));
  CHECK(m90.a_bar(1, 0) == doctest::Approx(-32.0));
  const MinimaMatrix m45 = rotate_minima(std::numbers::pi / 4);
  CHECK(m45.a_bar(0, 0) == doctest::Approx(-45.2548).epsilon(1e-5));
  CHECK(std::abs(m45.a_bar(1, 0)) < 1e-12);
}

TEST_CASE("rotation is an isometry for every alpha") {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const double alpha = rng.uniform(0.0, std::numbers::pi / 2);
    const MinimaMatrix m = rotate_minima(alpha);
    for (int j = 0; j < 8; ++j)
      CHECK(m.a_bar.col(j).norm() == doctest::Approx(m.a.col(j).norm()).epsilon(1e-14));
  }
}

TEST_CASE("out-of-range alpha is clamped with a warning") {
  const long before = log::warning_count();
  log::set_sink([](const std::string&) {});
  const MinimaMatrix m = rotate_minima(3.0);
  log::set_sink(nullptr);
  CHECK(log::warning_count() == before + 1);
  CHECK(m.alpha == doctest::Approx(kAlphaMax));
}

TEST_CASE("value matches the oracle") {
  const MinimaMatrix m0 = rotate_minima(0.0);
  CHECK(value(Point(-32, 32), m0) == doctest::Approx(0.9973).epsilon(1e-4));
  CHECK(value(Point(0, 0), m0) == doctest::Approx(500.0).epsilon(0.01));
  Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    const double alpha = rng.uniform(0.0, 1.5);
    const Point x(rng.uniform(-50, 50), rng.uniform(-50, 50));
    const double v = value(x, rotate_minima(alpha));
    CHECK(v > 0.0);
    CHECK(v == doctest::Approx(oracle_value(x[0], x[1], alpha)).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central differences on 1000 points") {
  Rng rng(5);
  int checked = 0;
  for (int k = 0; k < 1000; ++k) {
    const MinimaMatrix m = rotate_minima(rng.uniform(0.0, 1.5));
    // sample near wells where the gradient is not negligible
    const int j = static_cast<int>(rng.below(8));
    const Point x = m.a_bar.col(j) + Point(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const Point g = gradient(x, m);
    const Vector fd = finite_diff_gradient([&](const Vector& v) { return value(v, m); },
                                           Vector(x), 1e-5);
    const double scale = std::max(g.norm(), 1e-3);
    CHECK((g - fd).norm() / scale < 1e-5);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("gradient is antisymmetric about an isolated well center") {
  const MinimaMatrix m = rotate_minima(0.0);
  const GroundTruth gt = ground_truth_minima(0.0);
  const Point c = gt.minima[0];
  const Point d(1e-3, -6e-4);
  const Point gp = gradient(c + d, m);
  const Point gm = gradient(c - d, m);
  CHECK((gp + gm).norm() < 0.05 * gp.norm());
}

TEST_CASE("ground truth minima") {
  const GroundTruth gt = ground_truth_minima(0.0);
  const MinimaMatrix m = rotate_minima(0.0);
  int c0 = 0, c1 = 0;
  for (int j = 0; j < 8; ++j) {
    // independent Nelder-Mead refinement puts the wells 0.2247 (cluster 0) and
    // 0.1228 (cluster 1) away from their columns
    const double shift = j < 4 ? 0.22470600 : 0.12284240;
    CHECK((gt.minima[j] - m.a.col(j)).norm() == doctest::Approx(shift).epsilon(1e-5));
    CHECK(gradient(gt.minima[j], m).norm() < 1e-8);
    (gt.cluster[j] == 0 ? c0 : c1)++;
  }
  CHECK(c0 == 4);
  CHECK(c1 == 4);
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      const double d = (gt.minima[i] - gt.minima[j]).norm();
      if (gt.cluster[i] == gt.cluster[j]) CHECK(d <= 6.0 * std::sqrt(2.0));
      else CHECK(d >= 40.0);
    }
}

TEST_CASE("refined minima stay within 2 of the rotated columns for any alpha") {
  for (int k = 0; k <= 10; ++k) {
    const double alpha = k * kAlphaMax / 10;
    const GroundTruth gt = ground_truth_minima(alpha);
    const MinimaMatrix m = rotate_minima(alpha);
    for (int j = 0; j < 8; ++j) CHECK((gt.minima[j] - m.a_bar.col(j)).norm() < 2.0);
  }
}

TEST_CASE("grid starts are cell centers") {
  const auto g = grid_starts(100);
  CHECK(g.size() == 10000);
  CHECK(g.front()[0] == doctest::Approx(-49.5));
  CHECK(g.back()[1] == doctest::Approx(49.5));
  CHECK_THROWS_AS(grid_starts(0), InvalidInput);
}

TEST_CASE("BFGS from (-30, 30) lands in the (-32, 32) basin") {
  const MinimaMatrix m = rotate_minima(0.0);
  const Bounds box{Vector::Constant(2, -50), Vector::Constant(2, 50)};
  Vector x0(2);
  x0 << -30, 30;
  const SolveResult r = bfgs_minimize(
      [&](const Vector& x, Vector* g) {
        if (g) *g = gradient(x, m);
        return value(x, m);
      },
      x0, box, default_bfgs_options());
  REQUIRE(r.converged);
  const GroundTruth gt = ground_truth_minima(0.0);
  const auto [d, idx] = nearest_minimum(gt, r.x_star);
  CHECK(d < 1e-3);
  // the grid oracle assigns (-30, 30) to the well seeded from column (-28, 32) or (-32, 32)
  CHECK((idx == 0 || idx == 1 || idx == 2 || idx == 3));
}
