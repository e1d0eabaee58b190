#include "ags/problem.hpp"

#include <cmath>
#include <string>
#include <tuple>

#include "ags/work_clock.hpp"

namespace ags {

namespace {
thread_local double g_work_units = 0.0;
}

void work::add(double units) { g_work_units += units; }
double work::total() { return g_work_units; }

ClockMode parse_clock_mode(const std::string& s) {
  if (s == "work") return ClockMode::kWork;
  if (s == "wall") return ClockMode::kWall;
  throw InvalidInput("unknown clock mode '" + s + "' (expected work or wall)");
}

std::string to_string(ClockMode mode) { return mode == ClockMode::kWork ? "work" : "wall"; }

ProblemParameter ProblemParameter::scalar(double v, double lo, double hi) {
  ProblemParameter p;
  p.value = Vector::Constant(1, v);
  p.lower = Vector::Constant(1, lo);
  p.upper = Vector::Constant(1, hi);
  return p;
}

bool ProblemParameter::within_bounds() const {
  return (value.array() >= lower.array()).all() && (value.array() <= upper.array()).all();
}

bool Bounds::contains(const Vector& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

Vector Bounds::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

ProblemInstance::ProblemInstance(Bounds bounds, ProblemParameter alpha, int eq_count,
                                 int ineq_count)
    : bounds_(std::move(bounds)), alpha_(std::move(alpha)), eq_count_(eq_count),
      ineq_count_(ineq_count) {
  if (bounds_.lower.size() != bounds_.upper.size())
    throw InvalidInput("bounds: lower and upper differ in length");
  if ((bounds_.lower.array() > bounds_.upper.array()).any())
    throw InvalidInput("bounds: lower exceeds upper");
  if (eq_count_ < 0 || ineq_count_ < 0) throw InvalidInput("negative constraint count");
  if (!alpha_.within_bounds()) throw InvalidInput("problem parameter outside its declared range");
}

void ProblemInstance::check_input(const Vector& x) const {
  if (x.size() != dimension())
    throw InvalidInput("decision vector has dimension " + std::to_string(x.size()) +
                       ", problem expects " + std::to_string(dimension()));
  if (!x.allFinite()) throw InvalidInput("decision vector has non-finite entries");
}

double ProblemInstance::evaluate_objective(const Vector& x) const {
  check_input(x);
  const double j = objective_impl(x);
  if (!std::isfinite(j)) throw InvalidInput("objective evaluated to a non-finite value");
  return j;
}

ConstraintValues ProblemInstance::evaluate_constraints(const Vector& x) const {
  check_input(x);
  ConstraintValues c = constraints_impl(x);
  if (c.eq.size() != eq_count_ || c.ineq.size() != ineq_count_)
    throw std::logic_error("constraint vector sizes disagree with declared counts");
  if (!c.eq.allFinite() || !c.ineq.allFinite())
    throw InvalidInput("constraints evaluated to non-finite values");
  return c;
}

std::pair<double, Vector> ProblemInstance::objective_and_eq(const Vector& x) const {
  return {evaluate_objective(x), evaluate_constraints(x).eq};
}

Vector ProblemInstance::objective_gradient(const Vector& x) const {
  check_input(x);
  return finite_diff_gradient([this](const Vector& v) { return objective_impl(v); }, x);
}

Matrix ProblemInstance::eq_jacobian(const Vector& x) const {
  check_input(x);
  if (eq_count_ == 0) return Matrix(0, x.size());
  return finite_diff_jacobian([this](const Vector& v) { return constraints_impl(v).eq; }, x);
}

FirstOrder ProblemInstance::evaluate_first_order(const Vector& x) const {
  FirstOrder out;
  std::tie(out.objective, out.eq) = objective_and_eq(x);
  out.gradient = objective_gradient(x);
  out.eq_jacobian = eq_jacobian(x);
  return out;
}

Vector ProblemInstance::sample_uniform_init(std::uint64_t seed) const {
  Rng rng(seed);
  return sample_impl(rng);
}

Vector ProblemInstance::sample_impl(Rng& rng) const {
  Vector x(dimension());
  for (int i = 0; i < dimension(); ++i) {
    const double lo = bounds_.lower[i];
    const double hi = bounds_.upper[i];
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw InvalidInput("coordinate " + std::to_string(i) +
                         " is unbounded and has no sampling interval");
    x[i] = rng.uniform(lo, hi);
  }
  return x;
}

}  // namespace ags
