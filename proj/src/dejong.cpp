#include "ags/dejong.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ags/log.hpp"
#include "ags/work_clock.hpp"

namespace ags::dejong {

const Minima& base_minima() {
  static const Minima a = [] {
    Minima m;
    m << -32, -32, -28, -28, 12, 12, 18, 18,
          32, 28, 32, 28, -12, -18, -12, -18;
    return m;
  }();
  return a;
}

MinimaMatrix rotate_minima(double alpha) {
  if (!std::isfinite(alpha)) throw InvalidInput("rotate_minima: non-finite alpha");
  if (alpha < kAlphaMin || alpha > kAlphaMax) {
    log::warn("De Jong rotation " + std::to_string(alpha) + " clamped to [0, pi/2]");
    alpha = std::clamp(alpha, kAlphaMin, kAlphaMax);
  }
  Eigen::Matrix2d r;
  r << std::cos(alpha), -std::sin(alpha), std::sin(alpha), std::cos(alpha);
  return {base_minima(), r * base_minima(), alpha};
}

namespace {

inline double pow6(double v) {
  const double v2 = v * v;
  return v2 * v2 * v2;
}

}  // namespace

double value(const Point& x, const MinimaMatrix& m) {
  double s = 0.002;
  for (int i = 0; i < 8; ++i)
    s += 1.0 / (1.0 + pow6(x[0] - m.a_bar(0, i)) + pow6(x[1] - m.a_bar(1, i)));
  work::add(1.0);
  return 1.0 / s;
}

Point gradient(const Point& x, const MinimaMatrix& m) {
  double s = 0.002;
  Point ds = Point::Zero();
  for (int i = 0; i < 8; ++i) {
    const double d0 = x[0] - m.a_bar(0, i);
    const double d1 = x[1] - m.a_bar(1, i);
    const double den = 1.0 + pow6(d0) + pow6(d1);
    s += 1.0 / den;
    const double k = -6.0 / (den * den);
    ds[0] += k * std::pow(d0, 5);
    ds[1] += k * std::pow(d1, 5);
  }
  work::add(1.0);
  return -ds / (s * s);
}

BfgsOptions default_bfgs_options() {
  BfgsOptions o;
  o.tol_opt = 1e-8;
  o.max_iter = 2000;
  return o;
}

GroundTruth ground_truth_minima(double alpha, double tol) {
  const MinimaMatrix m = rotate_minima(alpha);
  const Bounds box{Vector::Constant(2, -kDomain), Vector::Constant(2, kDomain)};
  BfgsOptions opts = default_bfgs_options();
  opts.tol_opt = tol;
  GroundTruth gt;
  for (int j = 0; j < 8; ++j) {
    const Vector start = m.a_bar.col(j);
    const SolveResult r = bfgs_minimize(
        [&](const Vector& x, Vector* g) {
          if (g != nullptr) *g = gradient(x, m);
          return value(x, m);
        },
        start, box, opts);
    if (!r.converged)
      throw std::runtime_error("ground_truth_minima: descent from column " + std::to_string(j) +
                               " did not converge (" + r.status + ")");
    gt.minima[j] = r.x_star;
    gt.cluster[j] = j < 4 ? 0 : 1;
  }
  return gt;
}

std::pair<double, int> nearest_minimum(const GroundTruth& gt, const Point& p) {
  double best = std::numeric_limits<double>::infinity();
  int idx = -1;
  for (int j = 0; j < 8; ++j) {
    const double d = (gt.minima[j] - p).norm();
    if (d < best) {
      best = d;
      idx = j;
    }
  }
  return {best, idx};
}

std::vector<Vector> grid_starts(int points_per_axis) {
  if (points_per_axis < 1) throw InvalidInput("grid_starts: need at least one point per axis");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(points_per_axis) * points_per_axis);
  const double cell = 2.0 * kDomain / points_per_axis;
  for (int i = 0; i < points_per_axis; ++i) {
    for (int j = 0; j < points_per_axis; ++j) {
      Vector p(2);
      p << -kDomain + (i + 0.5) * cell, -kDomain + (j + 0.5) * cell;
      out.push_back(std::move(p));
    }
  }
  return out;
}

DeJongProblem::DeJongProblem(double alpha)
    : ProblemInstance(Bounds{Vector::Constant(2, -kDomain), Vector::Constant(2, kDomain)},
                      ProblemParameter::scalar(std::clamp(alpha, kAlphaMin, kAlphaMax), kAlphaMin,
                                               kAlphaMax),
                      0, 0),
      minima_(rotate_minima(alpha)) {}

double DeJongProblem::objective_impl(const Vector& x) const { return value(x, minima_); }

ConstraintValues DeJongProblem::constraints_impl(const Vector&) const {
  return {Vector(0), Vector(0)};
}

Vector DeJongProblem::objective_gradient(const Vector& x) const {
  check_input(x);
  return gradient(x, minima_);
}

FirstOrder DeJongProblem::evaluate_first_order(const Vector& x) const {
  FirstOrder fo;
  fo.objective = evaluate_objective(x);
  fo.eq = Vector(0);
  fo.gradient = gradient(x, minima_);
  fo.eq_jacobian = Matrix(0, 2);
  return fo;
}

}  // namespace ags::dejong
