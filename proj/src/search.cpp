#include "ags/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace ags {

SolveResult solve_local(const ProblemInstance& problem, const Vector& x0,
                        const LocalSolverSettings& settings, double cutoff) {
  if (problem.eq_constraint_count() > 0 || problem.ineq_constraint_count() > 0) {
    AugLagOptions o = settings.auglag;
    o.cutoff = cutoff;
    return augmented_lagrangian_solve(problem, x0, o);
  }
  BfgsOptions o = settings.bfgs;
  o.cutoff = cutoff;
  return bfgs_minimize(
      [&problem](const Vector& x, Vector* g) {
        if (g != nullptr) {
          const FirstOrder fo = problem.evaluate_first_order(x);
          *g = fo.gradient;
          return fo.objective;
        }
        return problem.evaluate_objective(x);
      },
      x0, problem.bounds(), o);
}

SearchRun multistart(const ProblemInstance& problem, const InitSource& inits, int n, double cutoff,
                     std::uint64_t seed, const LocalSolverSettings& settings, int workers) {
  if (n < 0) throw InvalidInput("multistart: negative number of initializations");
  if (static_cast<std::size_t>(n) > inits.capacity())
    throw InvalidInput("multistart: init source '" + inits.name() + "' holds " +
                       std::to_string(inits.capacity()) + " initializations, " +
                       std::to_string(n) + " requested");
  SearchRun run;
  run.problem_id = problem.id();
  run.alpha = problem.alpha()[0];
  run.init_source = inits.name();
  run.n_inits = n;
  run.cutoff = cutoff;
  run.seed = seed;
  run.results.resize(n);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        const std::uint64_t task_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        const Vector x0 = problem.clamp_to_bounds(inits.draw(i, task_seed));
        SolveResult r = solve_local(problem, x0, settings, cutoff);
        r.seed = task_seed;
        run.results[i] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  int threads = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return run;
}

std::vector<SolveResult> filter_good(const std::vector<SolveResult>& results, double threshold) {
  std::vector<SolveResult> out;
  for (const auto& r : results)
    if (r.converged && r.objective <= -threshold) out.push_back(r);
  return out;
}

std::vector<SolveResult> filter_converged(const std::vector<SolveResult>& results) {
  std::vector<SolveResult> out;
  for (const auto& r : results)
    if (r.converged) out.push_back(r);
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SearchStats solve_time_stats(const std::vector<SolveResult>& good, double threshold) {
  SearchStats s;
  s.threshold = threshold;
  if (good.empty()) return s;
  std::vector<double> t;
  t.reserve(good.size());
  for (const auto& r : good) t.push_back(r.solve_time);
  s.empty = false;
  s.good_count = static_cast<int>(t.size());
  double sum = 0.0;
  for (double v : t) sum += v;
  s.mean = sum / static_cast<double>(t.size());
  s.min = *std::min_element(t.begin(), t.end());
  s.q25 = quantile(t, 0.25);
  s.q50 = quantile(t, 0.5);
  return s;
}

bool recheck_solution(const ProblemInstance& problem, const SolveResult& result, double tol_feas) {
  if (result.x_star.size() != problem.dimension() || !result.x_star.allFinite()) return false;
  if (!problem.bounds().contains(result.x_star)) return false;
  try {
    const double j = problem.evaluate_objective(result.x_star);
    if (std::abs(j - result.objective) > 1e-9 * std::max(1.0, std::abs(j))) return false;
    const ConstraintValues c = problem.evaluate_constraints(result.x_star);
    if (c.eq.size() > 0 && !(c.eq.lpNorm<Eigen::Infinity>() <= tol_feas)) return false;
    if (c.ineq.size() > 0 && !(c.ineq.maxCoeff() <= tol_feas)) return false;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

int recheck_run(const ProblemInstance& problem, SearchRun& run, double tol_feas) {
  int demoted = 0;
  for (SolveResult& r : run.results) {
    if (!r.converged || recheck_solution(problem, r, tol_feas)) continue;
    r.converged = false;
    r.status = "recheck_failed";
    ++demoted;
  }
  return demoted;
}

Perturbation Perturbation::parse(const std::string& spec) {
  // uniform | gaussian:<sigma> | pareto:<shape>[:<sigma>]
  Perturbation p;
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.empty()) throw InvalidInput("empty perturbation spec");
  auto number = [&](std::size_t i) {
    try {
      return std::stod(parts.at(i));
    } catch (const std::exception&) {
      throw InvalidInput("bad number in perturbation spec '" + spec + "'");
    }
  };
  if (parts[0] == "uniform" && parts.size() == 1) {
    p.kind = Kind::kUniformResample;
  } else if (parts[0] == "gaussian" && parts.size() == 2) {
    p.kind = Kind::kGaussian;
    p.sigma = number(1);
  } else if (parts[0] == "pareto" && (parts.size() == 2 || parts.size() == 3)) {
    p.kind = Kind::kPareto;
    p.shape = number(1);
    if (parts.size() == 3) p.sigma = number(2);
  } else {
    throw InvalidInput("unknown perturbation '" + spec + "'");
  }
  if (!(p.sigma >= 0.0) || !(p.shape > 0.0)) throw InvalidInput("perturbation scale must be positive");
  return p;
}

std::string Perturbation::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::kUniformResample: os << "uniform"; break;
    case Kind::kGaussian: os << "gaussian:" << sigma; break;
    case Kind::kPareto: os << "pareto:" << shape << ":" << sigma; break;
  }
  return os.str();
}

Vector perturb(const ProblemInstance& problem, const Vector& x, const Perturbation& p, Rng& rng) {
  const Bounds& b = problem.bounds();
  Vector out = x;
  for (int i = 0; i < x.size(); ++i) {
    const double w = b.upper[i] - b.lower[i];
    if (!std::isfinite(w)) throw InvalidInput("perturb: unbounded coordinate " + std::to_string(i));
    double step = 0.0;
    if (p.kind == Perturbation::Kind::kGaussian) {
      step = p.sigma * w * rng.normal();
    } else if (p.kind == Perturbation::Kind::kPareto) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      step = sign * p.sigma * w * (std::pow(u, -1.0 / p.shape) - 1.0);
    }
    out[i] += step;
  }
  return problem.clamp_to_bounds(out);
}

SearchRun mbh_search(const ProblemInstance& problem, int n_hops, const Perturbation& perturbation,
                     double cutoff, std::uint64_t seed, const LocalSolverSettings& settings) {
  if (n_hops < 0) throw InvalidInput("mbh_search: negative hop count");
  SearchRun run;
  run.problem_id = problem.id();
  run.alpha = problem.alpha()[0];
  run.init_source = "mbh:" + perturbation.describe();
  run.n_inits = n_hops;
  run.cutoff = cutoff;
  run.seed = seed;
  int incumbent = -1;
  for (int i = 0; i < n_hops; ++i) {
    const std::uint64_t task_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    Vector x0;
    if (incumbent < 0 || perturbation.kind == Perturbation::Kind::kUniformResample) {
      x0 = problem.sample_uniform_init(task_seed);
    } else {
      Rng rng(task_seed);
      x0 = perturb(problem, run.results[incumbent].x_star, perturbation, rng);
    }
    SolveResult r = solve_local(problem, x0, settings, cutoff);
    r.seed = task_seed;
    run.results.push_back(std::move(r));
    const SolveResult& last = run.results.back();
    if (last.converged && (incumbent < 0 || last.objective < run.results[incumbent].objective))
      incumbent = i;
  }
  return run;
}

}  // namespace ags
