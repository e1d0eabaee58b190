#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ags/problem.hpp"
#include "ags/solver.hpp"

namespace ags {

/// Supplier of initial guesses for a multistart run.
class InitSource {
 public:
  virtual ~InitSource() = default;
  /// "uniform", "generative-model" or "file".
  virtual std::string name() const = 0;
  /// Number of initializations available (SIZE_MAX when unlimited).
  virtual std::size_t capacity() const = 0;
  /// The index-th initialization; `seed` is the task seed derived from the run seed.
  virtual Vector draw(std::size_t index, std::uint64_t seed) const = 0;
};

/// Uniform sampling through the problem's own sampler.
class UniformInit final : public InitSource {
 public:
  explicit UniformInit(const ProblemInstance& problem) : problem_(problem) {}
  std::string name() const override { return "uniform"; }
  std::size_t capacity() const override { return SIZE_MAX; }
  Vector draw(std::size_t, std::uint64_t seed) const override {
    return problem_.sample_uniform_init(seed);
  }

 private:
  const ProblemInstance& problem_;
};

/// A precomputed list (model samples or a file), clamped by the problem.
class ListInit final : public InitSource {
 public:
  ListInit(std::string name, std::vector<Vector> inits)
      : name_(std::move(name)), inits_(std::move(inits)) {}
  std::string name() const override { return name_; }
  std::size_t capacity() const override { return inits_.size(); }
  Vector draw(std::size_t index, std::uint64_t) const override { return inits_.at(index); }

 private:
  std::string name_;
  std::vector<Vector> inits_;
};

/// Local solver selection: bounded BFGS without constraints, augmented
/// Lagrangian otherwise. `cutoff` overrides the option structs.
struct LocalSolverSettings {
  BfgsOptions bfgs;
  AugLagOptions auglag;
};

SolveResult solve_local(const ProblemInstance& problem, const Vector& x0,
                        const LocalSolverSettings& settings, double cutoff);

struct SearchRun {
  std::string problem_id;
  double alpha = 0.0;
  std::string init_source;
  int n_inits = 0;
  double cutoff = 0.0;
  std::uint64_t seed = 0;
  std::vector<SolveResult> results;  // in initialization order
};

/// n independent solves; task i uses derive_seed(seed, i) and init i.
/// Runs on `workers` threads (0 = hardware concurrency); results do not
/// depend on the worker count.
SearchRun multistart(const ProblemInstance& problem, const InitSource& inits, int n, double cutoff,
                     std::uint64_t seed, const LocalSolverSettings& settings, int workers = 1);

/// Converged results with objective <= -threshold (m_f >= threshold for the
/// transfer, whose objective is -m_f).
std::vector<SolveResult> filter_good(const std::vector<SolveResult>& results, double threshold);

/// Converged results regardless of objective value.
std::vector<SolveResult> filter_converged(const std::vector<SolveResult>& results);

struct SearchStats {
  bool empty = true;
  int good_count = 0;
  double threshold = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
};

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

SearchStats solve_time_stats(const std::vector<SolveResult>& good, double threshold = 0.0);

/// Independent check of a reported solution: inside the bounds, constraint
/// violation below tol_feas and the objective matching the report.
bool recheck_solution(const ProblemInstance& problem, const SolveResult& result,
                      double tol_feas = 1e-6);

/// Demotes converged results that fail recheck_solution (status
/// "recheck_failed"). Returns the number demoted.
int recheck_run(const ProblemInstance& problem, SearchRun& run, double tol_feas = 1e-6);

struct Perturbation {
  enum class Kind { kUniformResample, kGaussian, kPareto };
  Kind kind = Kind::kUniformResample;
  double sigma = 0.05;  // fraction of each bound width
  double shape = 2.0;   // Pareto tail index

  static Perturbation parse(const std::string& spec);
  std::string describe() const;
};

/// Perturbed copy of x, clamped to the problem bounds. Gaussian steps use
/// sigma * width; Pareto steps use sigma * width * (U^(-1/shape) - 1) with a
/// random sign.
Vector perturb(const ProblemInstance& problem, const Vector& x, const Perturbation& p, Rng& rng);

/// Monotonic basin hopping. Hop 0 solves from a uniform init; later hops
/// resample uniformly or perturb the incumbent (best converged result) and
/// replace it on improvement. With uniform resampling it reproduces
/// multistart exactly.
SearchRun mbh_search(const ProblemInstance& problem, int n_hops, const Perturbation& perturbation,
                     double cutoff, std::uint64_t seed, const LocalSolverSettings& settings);

}  // namespace ags
