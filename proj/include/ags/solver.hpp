#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ags/problem.hpp"
#include "ags/work_clock.hpp"

namespace ags {

/// Outcome of one local solve.
struct SolveResult {
  Vector x0;
  Vector x_star;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double feasibility = 0.0;   // max |c_eq|
  double stationarity = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int outer_iterations = 0;
  double solve_time = 0.0;    // in the configured clock
  double wall_time = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::string status;
  Vector multipliers;
  std::vector<double> accepted_feasibility;  // ||c||_inf after each accepted outer step
};

/// f(x, grad): returns the value and writes the gradient when grad != nullptr.
using ValueAndGradient = std::function<double(const Vector&, Vector*)>;

struct BfgsOptions {
  double tol_opt = 1e-8;
  int max_iter = 1000;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;
  double binding_epsilon = 1e-3;  // bound proximity treated as active
  int stall_window = 50;  // stop when f has not moved in this many iterations (0 disables)
  double cutoff = std::numeric_limits<double>::infinity();
  ClockMode clock = ClockMode::kWork;
};

/// Projected-gradient BFGS on a box with Armijo backtracking along the
/// projected path. Converged when ||P(x - g) - x||_inf < tol_opt.
SolveResult bfgs_minimize(const ValueAndGradient& fg, const Vector& x0, const Bounds& bounds,
                          const BfgsOptions& opts);

SolveResult bfgs_minimize(const std::function<double(const Vector&)>& f,
                          const std::function<Vector(const Vector&)>& grad, const Vector& x0,
                          const Bounds& bounds, const BfgsOptions& opts);

enum class GradientSource { kAnalytic, kFiniteDifference };

struct AugLagOptions {
  double tol_feas = 1e-6;
  double tol_opt = 1e-6;
  double rho_initial = 10.0;
  double rho_factor = 10.0;
  double rho_max = 1e8;
  double feas_reduction = 0.25;   // required ||c|| decrease for an accepted step
  double inner_tol_initial = 1e-3;
  int max_outer = 40;
  int max_stagnant = 3;  // penalty increases without feasibility progress before giving up
  int max_inner_iter = 1500;
  double fd_step = 1e-7;          // in scaled coordinates
  bool scale_variables = true;
  // inner model rho J^T J + B with B a damped BFGS estimate of the rest
  bool structured_metric = true;
  double metric_damping = 1e-2;  // initial B = metric_damping * I
  GradientSource gradient = GradientSource::kAnalytic;
  double cutoff = std::numeric_limits<double>::infinity();
  ClockMode clock = ClockMode::kWork;
};

/// Bound-constrained augmented Lagrangian for equality constraints:
/// minimizes J/s + lambda.c + rho/2 |c|^2 with an inner bounded BFGS, then
/// lambda <- lambda + rho c when feasibility improved enough, otherwise
/// rho <- rho_factor * rho. Problems with inequality constraints are rejected.
SolveResult augmented_lagrangian_solve(const ProblemInstance& problem, const Vector& x0,
                                       const AugLagOptions& opts);

}  // namespace ags
