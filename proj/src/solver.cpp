#include "ags/solver.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "ags/dopri.hpp"

namespace ags {

namespace {

bool try_eval(const ValueAndGradient& fg, const Vector& x, double& f, Vector* g) {
  try {
    f = fg(x, g);
  } catch (const PropagationError&) {
    return false;
  } catch (const InvalidInput&) {
    return false;
  }
  return std::isfinite(f) && (g == nullptr || g->allFinite());
}

Vector projected_step(const Vector& x, const Vector& g, const Bounds& b) {
  return b.clamp(x - g) - x;
}

// Known part of the Hessian at a point; false when unavailable.
using CurvatureFn = std::function<bool(const Vector&, Matrix&)>;

struct BfgsRun {
  SolveResult result;
  Matrix metric;  // inverse Hessian, or the residual Hessian in structured mode
  bool has_metric = false;
};

// Projected Armijo backtracking along x + t d. On success x_new, f_new and
// g_new hold the accepted point.
bool line_search(const ValueAndGradient& fg, const Vector& x, double f, const Vector& g,
                 const Vector& d, const Bounds& bounds, const BfgsOptions& opts,
                 const SolveClock& clock, Vector& x_new, double& f_new, Vector& g_new) {
  double t = 1.0;
  for (int k = 0; k < opts.max_backtracks; ++k, t *= opts.backtrack) {
    x_new = bounds.clamp(x + t * d);
    const Vector s = x_new - x;
    if (s.lpNorm<Eigen::Infinity>() == 0.0) return false;
    if (!try_eval(fg, x_new, f_new, nullptr)) continue;
    bool ok = f_new <= f + opts.armijo_c * g.dot(s);
    if (!ok && f_new - f <= 1e-14 * std::max(1.0, std::abs(f))) {
      // decrease below rounding: accept only if stationarity improves
      if (!try_eval(fg, x_new, f_new, &g_new)) continue;
      if (projected_step(x_new, g_new, bounds).lpNorm<Eigen::Infinity>() <
          projected_step(x, g, bounds).lpNorm<Eigen::Infinity>())
        return true;
    } else if (ok && try_eval(fg, x_new, f_new, &g_new)) {
      return true;
    }
    if (clock.elapsed() > opts.cutoff) return false;
  }
  return false;
}

void split_binding(const Vector& x, const Vector& g, const Bounds& bounds, double eps,
                   std::vector<int>& free_idx, std::vector<int>& binding_idx) {
  free_idx.clear();
  binding_idx.clear();
  for (int i = 0; i < static_cast<int>(x.size()); ++i) {
    if (bounds.lower[i] == bounds.upper[i]) continue;
    const bool at_lo = x[i] <= bounds.lower[i] + eps && g[i] > 0.0;
    const bool at_hi = x[i] >= bounds.upper[i] - eps && g[i] < 0.0;
    (at_lo || at_hi ? binding_idx : free_idx).push_back(i);
  }
}

// Shared outer loop. `direction` fills d from (x, g, free, binding, attempt);
// `update` absorbs an accepted step; `reset` drops the metric.
template <class Direction, class Update, class Reset>
SolveResult descent_loop(const ValueAndGradient& fg, const Vector& x_init, const Bounds& bounds,
                         const BfgsOptions& opts, const SolveClock& clock, Direction direction,
                         Update update, Reset reset) {
  const int n = static_cast<int>(x_init.size());
  SolveResult res;
  res.x0 = x_init;

  Vector x = bounds.clamp(x_init);
  Vector g(n);
  double f = 0.0;
  if (!try_eval(fg, x, f, &g)) {
    res.x_star = x;
    res.status = "evaluation_failure";
    return res;
  }

  std::vector<int> free_idx, binding_idx;
  Vector x_new(n), g_new(n), d(n);
  res.status = "max_iterations";
  int iter = 0;
  double f_window = f;
  for (; iter < opts.max_iter; ++iter) {
    if (opts.stall_window > 0 && iter > 0 && iter % opts.stall_window == 0) {
      if (f_window - f <= 1e-12 * std::max(1.0, std::abs(f))) {
        res.stationarity = projected_step(x, g, bounds).lpNorm<Eigen::Infinity>();
        res.status = "stalled";
        break;
      }
      f_window = f;
    }
    res.stationarity = projected_step(x, g, bounds).lpNorm<Eigen::Infinity>();
    if (res.stationarity < opts.tol_opt) {
      res.converged = true;
      res.status = "converged";
      break;
    }
    if (clock.elapsed() > opts.cutoff) {
      res.status = "cutoff";
      break;
    }

    split_binding(x, g, bounds, std::min(opts.binding_epsilon, res.stationarity), free_idx,
                  binding_idx);

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      d.setZero();
      direction(x, g, free_idx, binding_idx, d);
      double f_new = 0.0;
      if (line_search(fg, x, f, g, d, bounds, opts, clock, x_new, f_new, g_new)) {
        update(x, g, x_new, g_new);
        x = x_new;
        g = g_new;
        f = f_new;
        accepted = true;
      } else {
        reset();
      }
    }
    if (!accepted) {
      res.stationarity = projected_step(x, g, bounds).lpNorm<Eigen::Infinity>();
      res.status = clock.elapsed() > opts.cutoff ? "cutoff" : "line_search_failure";
      break;
    }
  }
  if (iter == opts.max_iter) {
    res.stationarity = projected_step(x, g, bounds).lpNorm<Eigen::Infinity>();
    if (res.stationarity < opts.tol_opt) {
      res.converged = true;
      res.status = "converged";
    }
  }
  res.iterations = iter;
  res.x_star = x;
  res.objective = f;
  return res;
}

BfgsRun bfgs_core(const ValueAndGradient& fg, const Vector& x_init, const Bounds& bounds,
                  const BfgsOptions& opts, const SolveClock& clock, const Matrix* warm_hessian) {
  const int n = static_cast<int>(x_init.size());
  BfgsRun run;
  Matrix H = Matrix::Identity(n, n);
  bool scaled = false;
  if (warm_hessian != nullptr && warm_hessian->rows() == n) {
    H = *warm_hessian;
    scaled = true;
  }

  auto direction = [&](const Vector&, const Vector& g, const std::vector<int>& free_idx,
                       const std::vector<int>& binding_idx, Vector& d) {
    if (!binding_idx.empty()) {
      const double diag = free_idx.empty() ? 1.0 : H.diagonal()(free_idx).mean();
      d(binding_idx) = -diag * g(binding_idx);
    }
    if (!free_idx.empty()) {
      const Vector gf = g(free_idx);
      d(free_idx) = -(H(free_idx, free_idx) * gf);
      if (gf.dot(d(free_idx)) >= 0.0) {
        H.setIdentity();
        scaled = false;
        d(free_idx) = -gf;
      }
    }
  };
  auto update = [&](const Vector& x, const Vector& g, const Vector& x_new, const Vector& g_new) {
    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (!(sy > 1e-12 * s.norm() * y.norm())) return;
    if (!scaled) {
      H = Matrix::Identity(n, n) * (sy / y.squaredNorm());
      scaled = true;
    }
    const Vector hy = H * y;
    const double yhy = y.dot(hy);
    H += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
         (hy * s.transpose() + s * hy.transpose()) / sy;
  };
  auto reset = [&] {
    H.setIdentity();
    scaled = false;
  };
  run.result = descent_loop(fg, x_init, bounds, opts, clock, direction, update, reset);
  run.metric = std::move(H);
  run.has_metric = scaled;
  return run;
}

// Structured quasi-Newton: the model Hessian is G(x) + B where G is supplied
// exactly and B is a damped BFGS estimate of the remaining curvature.
BfgsRun structured_core(const ValueAndGradient& fg, const CurvatureFn& curvature,
                        const Vector& x_init, const Bounds& bounds, const BfgsOptions& opts,
                        const SolveClock& clock, const Matrix* warm_b, double b_initial) {
  const int n = static_cast<int>(x_init.size());
  BfgsRun run;
  Matrix B = Matrix::Identity(n, n) * b_initial;
  if (warm_b != nullptr && warm_b->rows() == n) B = *warm_b;
  Matrix G(n, n);

  auto direction = [&](const Vector& x, const Vector& g, const std::vector<int>& free_idx,
                       const std::vector<int>& binding_idx, Vector& d) {
    double diag = 1.0;
    if (!free_idx.empty()) {
      Matrix m = B(free_idx, free_idx);
      if (curvature(x, G)) m += G(free_idx, free_idx);
      diag = m.diagonal().mean();
      const Vector gf = g(free_idx);
      Eigen::LLT<Matrix> llt(m);
      Vector df;
      if (llt.info() == Eigen::Success) df = -llt.solve(gf);
      if (df.size() == 0 || !df.allFinite() || gf.dot(df) >= 0.0) df = -gf / std::max(diag, 1e-12);
      d(free_idx) = df;
    }
    if (!binding_idx.empty()) d(binding_idx) = -g(binding_idx) / std::max(diag, 1e-12);
  };
  auto update = [&](const Vector& x, const Vector& g, const Vector& x_new, const Vector& g_new) {
    const Vector s = x_new - x;
    Vector y = g_new - g;
    if (curvature(x_new, G)) y.noalias() -= G * s;
    const Vector bs = B * s;
    const double sbs = s.dot(bs);
    if (!(sbs > 0.0)) return;
    // Powell damping keeps B positive definite
    double sy = s.dot(y);
    if (sy < 0.2 * sbs) {
      const double theta = 0.8 * sbs / (sbs - sy);
      y = theta * y + (1.0 - theta) * bs;
      sy = s.dot(y);
    }
    B += (y * y.transpose()) / sy - (bs * bs.transpose()) / sbs;
  };
  auto reset = [&] { B = Matrix::Identity(n, n) * b_initial; };
  run.result = descent_loop(fg, x_init, bounds, opts, clock, direction, update, reset);
  run.metric = std::move(B);
  run.has_metric = true;
  return run;
}

}  // namespace

SolveResult bfgs_minimize(const ValueAndGradient& fg, const Vector& x0, const Bounds& bounds,
                          const BfgsOptions& opts) {
  if (x0.size() != bounds.size()) throw InvalidInput("bfgs_minimize: x0 and bounds differ in size");
  if (!x0.allFinite()) throw InvalidInput("bfgs_minimize: non-finite x0");
  const SolveClock clock(opts.clock);
  SolveResult res = bfgs_core(fg, x0, bounds, opts, clock, nullptr).result;
  res.solve_time = clock.elapsed();
  res.wall_time = clock.wall_seconds();
  return res;
}

SolveResult bfgs_minimize(const std::function<double(const Vector&)>& f,
                          const std::function<Vector(const Vector&)>& grad, const Vector& x0,
                          const Bounds& bounds, const BfgsOptions& opts) {
  return bfgs_minimize(
      [&](const Vector& x, Vector* g) {
        if (g != nullptr) *g = grad(x);
        return f(x);
      },
      x0, bounds, opts);
}

SolveResult augmented_lagrangian_solve(const ProblemInstance& problem, const Vector& x0,
                                       const AugLagOptions& opts) {
  if (problem.ineq_constraint_count() > 0)
    throw InvalidInput("augmented_lagrangian_solve handles equality constraints only");
  if (x0.size() != problem.dimension())
    throw InvalidInput("augmented_lagrangian_solve: x0 has the wrong dimension");
  if (!x0.allFinite()) throw InvalidInput("augmented_lagrangian_solve: non-finite x0");

  const SolveClock clock(opts.clock);
  const int n = problem.dimension();
  const int m = problem.eq_constraint_count();
  const Bounds& xb = problem.bounds();

  // z = (x - shift) / width; fixed coordinates keep unit width
  Vector shift = Vector::Zero(n);
  Vector width = Vector::Ones(n);
  if (opts.scale_variables) {
    for (int i = 0; i < n; ++i) {
      const double w = xb.upper[i] - xb.lower[i];
      if (std::isfinite(w) && w > 0.0) {
        shift[i] = xb.lower[i];
        width[i] = w;
      }
    }
  }
  auto to_x = [&](const Vector& z) -> Vector { return shift + width.cwiseProduct(z); };
  const Bounds zb{(xb.lower - shift).cwiseQuotient(width), (xb.upper - shift).cwiseQuotient(width)};
  const double obj_scale = problem.objective_scale();

  Vector lambda = Vector::Zero(m);
  double rho = opts.rho_initial;

  auto merit_value = [&](const Vector& z) {
    const auto [j, c] = problem.objective_and_eq(to_x(z));
    return j / obj_scale + lambda.dot(c) + 0.5 * rho * c.squaredNorm();
  };
  // Jacobian in z coordinates at the last analytic gradient evaluation
  Vector cached_z;
  Matrix cached_jz;
  const ValueAndGradient merit = [&](const Vector& z, Vector* grad) -> double {
    if (grad == nullptr) return merit_value(z);
    if (opts.gradient == GradientSource::kFiniteDifference) {
      *grad = finite_diff_gradient(merit_value, z, opts.fd_step);
      return merit_value(z);
    }
    const FirstOrder fo = problem.evaluate_first_order(to_x(z));
    const Vector w = lambda + rho * fo.eq;
    Vector gx = fo.gradient / obj_scale;
    if (m > 0) gx.noalias() += fo.eq_jacobian.transpose() * w;
    *grad = width.cwiseProduct(gx);
    cached_z = z;
    cached_jz = fo.eq_jacobian * width.asDiagonal();
    return fo.objective / obj_scale + lambda.dot(fo.eq) + 0.5 * rho * fo.eq.squaredNorm();
  };
  const CurvatureFn penalty_curvature = [&](const Vector& z, Matrix& G) {
    if (m == 0 || opts.gradient == GradientSource::kFiniteDifference) return false;
    if (cached_z.size() != z.size() || cached_z != z) {
      try {
        cached_jz = problem.evaluate_first_order(to_x(z)).eq_jacobian * width.asDiagonal();
        cached_z = z;
      } catch (const PropagationError&) {
        return false;
      } catch (const InvalidInput&) {
        return false;
      }
    }
    G.noalias() = rho * cached_jz.transpose() * cached_jz;
    return true;
  };

  SolveResult res;
  res.x0 = x0;
  Vector z = zb.clamp((x0 - shift).cwiseQuotient(width));

  auto feasibility_at = [&](const Vector& x) -> std::optional<double> {
    try {
      const auto c = problem.objective_and_eq(x).second;
      return m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    } catch (const PropagationError&) {
      return std::nullopt;
    }
  };
  const auto feas0 = feasibility_at(to_x(z));
  if (!feas0) {
    res.x_star = to_x(z);
    res.status = "evaluation_failure";
    res.solve_time = clock.elapsed();
    res.wall_time = clock.wall_seconds();
    return res;
  }
  double last_accepted = std::numeric_limits<double>::infinity();

  double omega = std::max(opts.inner_tol_initial, opts.tol_opt);
  Matrix metric;
  bool have_metric = false;
  const bool structured = opts.structured_metric && m > 0 &&
                          opts.gradient == GradientSource::kAnalytic;
  res.status = "max_outer_iterations";
  double best_feas = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  int outer = 0;
  for (; outer < opts.max_outer; ++outer) {
    BfgsOptions inner_opts;
    inner_opts.tol_opt = omega;
    inner_opts.max_iter = opts.max_inner_iter;
    inner_opts.cutoff = opts.cutoff;
    inner_opts.clock = opts.clock;
    const Matrix* warm = have_metric ? &metric : nullptr;
    BfgsRun inner = structured ? structured_core(merit, penalty_curvature, z, zb, inner_opts, clock,
                                                 warm, opts.metric_damping)
                               : bfgs_core(merit, z, zb, inner_opts, clock, warm);
    res.iterations += inner.result.iterations;
    res.stationarity = inner.result.stationarity;
    if (inner.result.status == "evaluation_failure") {
      res.status = "evaluation_failure";
      break;
    }
    z = inner.result.x_star;
    have_metric = inner.has_metric;
    if (have_metric) metric = std::move(inner.metric);

    const Vector x = to_x(z);
    const auto [j, c] = problem.objective_and_eq(x);
    const double feas = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    res.feasibility = feas;

    if (inner.result.status == "cutoff" || clock.elapsed() > opts.cutoff) {
      res.status = "cutoff";
      break;
    }
    if (feas <= opts.tol_feas && inner.result.stationarity <= opts.tol_opt) {
      res.converged = true;
      res.status = "converged";
      break;
    }
    if (feas <= std::max(opts.tol_feas, opts.feas_reduction * last_accepted)) {
      lambda += rho * c;
      last_accepted = feas;
      res.accepted_feasibility.push_back(feas);
      omega = feas <= opts.tol_feas ? opts.tol_opt : std::max(opts.tol_opt, 0.1 * omega);
      stagnant = 0;
    } else {
      stagnant = feas > 0.9 * best_feas ? stagnant + 1 : 0;
      if (rho >= opts.rho_max || stagnant >= opts.max_stagnant) {
        res.status = inner.result.status == "line_search_failure" ? "line_search_failure"
                                                                   : "infeasible";
        break;
      }
      rho = std::min(rho * opts.rho_factor, opts.rho_max);
      have_metric = false;
    }
    best_feas = std::min(best_feas, feas);
  }
  res.outer_iterations = outer + (res.status == "max_outer_iterations" ? 0 : 1);

  res.x_star = to_x(z);
  res.multipliers = lambda * obj_scale;
  try {
    const auto [j, c] = problem.objective_and_eq(res.x_star);
    res.objective = j;
    res.feasibility = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    // first-order multiplier estimate at the returned point
    res.multipliers = (lambda + rho * c) * obj_scale;
  } catch (const PropagationError&) {
    res.converged = false;
    res.status = "evaluation_failure";
  }
  res.solve_time = clock.elapsed();
  res.wall_time = clock.wall_seconds();
  return res;
}

}  // namespace ags
