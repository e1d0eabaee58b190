#pragma once

#include <limits>

#include "ags/problem.hpp"

namespace ags::test {

// min |x|^2 s.t. x0 + x1 = 1 on [-5, 5]^2
class SphereWithLine final : public ProblemInstance {
 public:
  SphereWithLine(Vector lo = Vector::Constant(2, -5.0), Vector hi = Vector::Constant(2, 5.0))
      : ProblemInstance({std::move(lo), std::move(hi)}, ProblemParameter::scalar(0, 0, 1), 1, 0) {}
  std::string id() const override { return "sphere_line"; }

 protected:
  double objective_impl(const Vector& x) const override { return x.squaredNorm(); }
  ConstraintValues constraints_impl(const Vector& x) const override {
    return {Vector::Constant(1, x[0] + x[1] - 1.0), Vector(0)};
  }
};

// min x^2 s.t. x = 1
class ScalarKkt final : public ProblemInstance {
 public:
  ScalarKkt()
      : ProblemInstance({Vector::Constant(1, -10.0), Vector::Constant(1, 10.0)},
                        ProblemParameter::scalar(0, 0, 1), 1, 0) {}
  std::string id() const override { return "scalar_kkt"; }

 protected:
  double objective_impl(const Vector& x) const override { return x[0] * x[0]; }
  ConstraintValues constraints_impl(const Vector& x) const override {
    return {Vector::Constant(1, x[0] - 1.0), Vector(0)};
  }
};

class Unbounded final : public ProblemInstance {
 public:
  Unbounded()
      : ProblemInstance({Vector::Constant(1, -std::numeric_limits<double>::infinity()),
                         Vector::Constant(1, 1.0)},
                        ProblemParameter::scalar(0, 0, 1), 0, 0) {}
  std::string id() const override { return "unbounded"; }

 protected:
  double objective_impl(const Vector& x) const override { return x[0]; }
  ConstraintValues constraints_impl(const Vector&) const override { return {Vector(0), Vector(0)}; }
};

}  // namespace ags::test
