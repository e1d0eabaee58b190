#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ags/analysis.hpp"
#include "ags/config.hpp"
#include "ags/controlgen.hpp"
#include "ags/cvae.hpp"
#include "ags/dataset.hpp"

namespace ags {

inline constexpr int kCheckpointVersion = 1;

/// Problem instance for the configured family at one alpha.
std::unique_ptr<ProblemInstance> make_problem(const ProblemConfig& config, double alpha);
ProblemFactory make_factory(const ProblemConfig& config);

/// The generative pair: the CVAE over the first data_dim coordinates and,
/// for the transfer, the control generation model for the rest.
struct AmortizedModel {
  std::string problem_id;
  std::uint64_t training_seed = 0;
  cvae::Model cvae;
  std::optional<controlgen::Model> control;

  nlohmann::json to_json();
  static AmortizedModel from_json(const nlohmann::json& j);
  void save(const std::string& path);
  static AmortizedModel load(const std::string& path);
};

cvae::Architecture cvae_architecture(const ModelConfig& config);
controlgen::Architecture control_architecture(const ModelConfig& config, int sequence_length);

struct TrainingOutcome {
  AmortizedModel model;
  cvae::TrainReport report;
  int restart = 0;
  double tail_loss = 0.0;                   // mean loss over the last 10 epochs
  std::vector<double> restart_tail_losses;  // one per restart
};

/// Fits the normalization on the records, then trains the CVAE (and the
/// control model, jointly, when configured) with mini-batch Adam. With
/// train.restarts > 1 the lowest tail loss wins; restart 0 uses `seed`,
/// restart r uses derive_seed(seed, 1000 + r).
TrainingOutcome train_amortized(const std::vector<DatasetRecord>& records, const Config& config,
                                std::uint64_t seed);

/// n full decision vectors for alpha: CVAE samples, completed by the control
/// model when present, clamped to the problem bounds.
std::vector<Vector> predict_solutions(const AmortizedModel& model, const ProblemInstance& problem,
                                      double alpha, int n, std::uint64_t seed);

/// Good-solution threshold of the configured problem; -infinity keeps every
/// converged result.
double good_threshold(const ProblemConfig& config);

struct Comparison {
  std::vector<SearchRun> warm;
  std::vector<SearchRun> uniform;
  CompareReport report;
};

/// `search.rounds` paired multistart runs at `alpha`: model predictions
/// against uniform sampling, equal n_inits and cutoff. Round r uses seed
/// derive_seed(seed, r). Good solutions are re-checked before counting.
Comparison warm_start_comparison(const AmortizedModel& model, const ProblemInstance& problem,
                                 const SearchConfig& search, const LocalSolverSettings& settings,
                                 double threshold, std::uint64_t seed);

}  // namespace ags
