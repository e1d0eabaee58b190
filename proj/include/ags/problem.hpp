#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "ags/rng.hpp"

namespace ags {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised for malformed inputs: wrong dimension, NaN entries, bad options.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem parameter alpha together with its admissible range.
struct ProblemParameter {
  Vector value;
  Vector lower;
  Vector upper;

  static ProblemParameter scalar(double v, double lo, double hi);
  double operator[](int i) const { return value[i]; }
  bool within_bounds() const;
};

struct Bounds {
  Vector lower;
  Vector upper;

  int size() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& x) const;
  Vector clamp(const Vector& x) const;
};

struct ConstraintValues {
  Vector eq;    // target 0
  Vector ineq;  // feasible iff <= 0
};

/// Objective, equality constraints and their first derivatives at one point.
struct FirstOrder {
  double objective = 0.0;
  Vector eq;
  Vector gradient;
  Matrix eq_jacobian;
};

/// One member of a parameterized problem family: minimize J(x; alpha)
/// subject to equality/inequality constraints and box bounds.
///
/// Instances are immutable after construction and may be shared by
/// concurrent solver workers.
class ProblemInstance {
 public:
  virtual ~ProblemInstance() = default;

  virtual std::string id() const = 0;

  int dimension() const { return static_cast<int>(bounds_.lower.size()); }
  const Bounds& bounds() const { return bounds_; }
  const ProblemParameter& alpha() const { return alpha_; }
  int eq_constraint_count() const { return eq_count_; }
  int ineq_constraint_count() const { return ineq_count_; }

  /// J(x; alpha). Throws InvalidInput on dimension mismatch, NaN input or
  /// a non-finite result.
  double evaluate_objective(const Vector& x) const;

  ConstraintValues evaluate_constraints(const Vector& x) const;

  /// Gradient of J. Defaults to central differences.
  virtual Vector objective_gradient(const Vector& x) const;

  /// Jacobian of the equality constraints (eq_count x n). Defaults to
  /// central differences.
  virtual Matrix eq_jacobian(const Vector& x) const;

  /// Objective and constraints evaluated together; problems that share work
  /// between the two override this.
  virtual std::pair<double, Vector> objective_and_eq(const Vector& x) const;

  /// Everything a gradient-based solver needs at x. The default composes
  /// the individual calls above.
  virtual FirstOrder evaluate_first_order(const Vector& x) const;

  /// One uniform initialization; deterministic in `seed`.
  Vector sample_uniform_init(std::uint64_t seed) const;

  /// Shared clamping path for every initialization source.
  Vector clamp_to_bounds(const Vector& x) const { return bounds_.clamp(x); }

  /// Nominal magnitude of |J| used by solvers to scale the objective.
  virtual double objective_scale() const { return 1.0; }

 protected:
  ProblemInstance(Bounds bounds, ProblemParameter alpha, int eq_count, int ineq_count);

  virtual double objective_impl(const Vector& x) const = 0;
  virtual ConstraintValues constraints_impl(const Vector& x) const = 0;

  /// Draws one initialization. The default is i.i.d. uniform over the box
  /// and fails for unbounded coordinates.
  virtual Vector sample_impl(Rng& rng) const;

  void check_input(const Vector& x) const;

 private:
  Bounds bounds_;
  ProblemParameter alpha_;
  int eq_count_;
  int ineq_count_;
};

/// Central-difference gradient of a scalar function.
template <class F>
Vector finite_diff_gradient(F&& f, const Vector& x, double h = 1e-5) {
  if (!(h > 0.0)) throw InvalidInput("finite_diff_gradient: step must be positive");
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector function.
template <class F>
Matrix finite_diff_jacobian(F&& f, const Vector& x, double h = 1e-6) {
  if (!(h > 0.0)) throw InvalidInput("finite_diff_jacobian: step must be positive");
  Vector xp = x;
  Matrix jac;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const Vector fp = f(xp);
    xp[i] = xi - h;
    const Vector fm = f(xp);
    xp[i] = xi;
    if (i == 0) jac.resize(fp.size(), x.size());
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace ags
