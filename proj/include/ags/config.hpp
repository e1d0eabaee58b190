#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ags/search.hpp"
#include "ags/transfer.hpp"

namespace ags {

/// [problem]
struct ProblemConfig {
  std::string name = "dejong5";          // dejong5 | cr3bp_transfer
  std::string alphas = "grid:0:1.5707963267948966:51";  // grid:lo:hi:n or a comma list
  std::optional<double> good_threshold;  // m_f >= threshold for the transfer
  transfer::DeskScenarioSpec scenario;

  std::vector<double> alpha_list() const;
};

/// [solver]
struct SolverConfig {
  ClockMode clock = ClockMode::kWork;
  double bfgs_tol = 1e-8;
  int bfgs_max_iter = 1000;
  double tol_feas = 1e-6;
  double tol_opt = 1e-6;
  int max_outer = 40;
  int max_inner_iter = 1500;
  GradientSource gradient = GradientSource::kAnalytic;

  LocalSolverSettings settings() const;
};

/// [search]
struct SearchConfig {
  std::uint64_t seed = 0;
  int n_per_alpha = 1000;   // collect
  double collect_cutoff = 1e9;
  int workers = 1;
  int n_inits = 100;        // search / compare, per arm and round
  double cutoff = 1e9;
  int rounds = 5;
  double alpha_prime = 0.0;
  std::string perturbation = "uniform";
  int hops = 0;             // > 0 runs basin hopping instead of multistart
};

/// [model]
struct ModelConfig {
  std::string cvae = "dejong";  // dejong | transfer_full | transfer_reduced
  int shrink = 16;              // width divisor for transfer_reduced
  int components = 0;           // 0 keeps the architecture's K
  bool control = false;         // train the control generation model as well
  std::vector<int> control_encoder{5, 512, 512, 512};
  int lstm_hidden = 512;
  int lstm_layers = 3;
};

/// [train]
struct TrainConfig {
  int epochs = 50;
  int batch = 128;
  double lr = 1e-3;
  double recon_weight = 1.0;
  double control_weight = 1.0;
  double divergence_limit = 1e6;
  int restarts = 1;
  int samples = 1000;  // predictions per alpha
};

struct Config {
  ProblemConfig problem;
  SolverConfig solver;
  SearchConfig search;
  ModelConfig model;
  TrainConfig train;

  /// Resolved values of every key, for embedding in reports.
  nlohmann::json to_json() const;
};

/// Parses an INI file. Unknown sections or keys are rejected.
Config load_config(const std::string& path);
Config parse_config(const std::string& text);

/// Parses "1,2,3" into integers.
std::vector<int> parse_int_list(const std::string& s);

}  // namespace ags
