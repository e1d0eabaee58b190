#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ags/search.hpp"

namespace ags {

inline constexpr int kDatasetSchemaVersion = 1;

/// One locally optimal solution, stored as one JSON object per line.
struct DatasetRecord {
  std::string problem_id;
  double alpha = 0.0;
  Vector x;
  double objective = 0.0;
  double feasibility = 0.0;
  double solve_time = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;   // task seed of the solve
  std::uint64_t index = 0;  // position of the solve within its alpha block

  nlohmann::json to_json() const;
  /// Rejects missing fields and unknown schema versions.
  static DatasetRecord from_json(const nlohmann::json& j);
};

/// Reads and validates a JSON Lines dataset. When `dimension` is set every
/// record's x must have that length.
std::vector<DatasetRecord> read_dataset(const std::string& path,
                                        std::optional<int> dimension = std::nullopt);

/// Appends records in order; one compact JSON object per line.
void append_records(const std::string& path, const std::vector<DatasetRecord>& records);

using ProblemFactory = std::function<std::unique_ptr<ProblemInstance>(double alpha)>;

struct CollectOptions {
  std::vector<double> alphas;
  int n_per_alpha = 100;
  double cutoff = 1e9;
  std::uint64_t seed = 0;
  // keep converged results with objective <= -threshold; unset keeps every converged result
  std::optional<double> good_threshold;
  LocalSolverSettings settings;
  int workers = 1;
};

struct CollectSummary {
  int solves = 0;
  int written = 0;
  int skipped_existing = 0;
};

/// Multistart per alpha (run seed derive_seed(seed, alpha index)); converged
/// (and good) results are appended to `out_path`. Records already present
/// with the same (alpha, seed, index) key are not written twice.
CollectSummary collect_dataset(const ProblemFactory& factory, const CollectOptions& opts,
                               const std::string& out_path);

/// Column view of records: x rows and alpha values.
Matrix record_matrix(const std::vector<DatasetRecord>& records);
Vector record_alphas(const std::vector<DatasetRecord>& records);

}  // namespace ags
