#include "ags/dataset.hpp"

#include <fstream>
#include <set>
#include <stdexcept>
#include <tuple>

namespace ags {

nlohmann::json DatasetRecord::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kDatasetSchemaVersion;
  j["problem_id"] = problem_id;
  j["alpha"] = alpha;
  j["x"] = std::vector<double>(x.data(), x.data() + x.size());
  j["objective"] = objective;
  j["feasibility"] = feasibility;
  j["solve_time"] = solve_time;
  j["converged"] = converged;
  j["seed"] = seed;
  j["index"] = index;
  return j;
}

DatasetRecord DatasetRecord::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("dataset record is not a JSON object");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    throw InvalidInput("dataset record has no schema_version");
  const int version = j["schema_version"].get<int>();
  if (version != kDatasetSchemaVersion)
    throw InvalidInput("unsupported dataset schema version " + std::to_string(version));
  DatasetRecord r;
  try {
    r.problem_id = j.at("problem_id").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    const auto xs = j.at("x").get<std::vector<double>>();
    r.x = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    r.objective = j.at("objective").get<double>();
    r.feasibility = j.at("feasibility").get<double>();
    r.solve_time = j.at("solve_time").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.index = j.at("index").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed dataset record: ") + e.what());
  }
  return r;
}

std::vector<DatasetRecord> read_dataset(const std::string& path, std::optional<int> dimension) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  std::vector<DatasetRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    DatasetRecord r;
    try {
      r = DatasetRecord::from_json(j);
    } catch (const InvalidInput& e) {
      throw InvalidInput(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (dimension && r.x.size() != *dimension)
      throw InvalidInput(path + ":" + std::to_string(line_no) + ": x has " +
                         std::to_string(r.x.size()) + " entries, expected " +
                         std::to_string(*dimension));
    out.push_back(std::move(r));
  }
  return out;
}

void append_records(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write dataset " + path);
  for (const DatasetRecord& r : records) out << r.to_json().dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

CollectSummary collect_dataset(const ProblemFactory& factory, const CollectOptions& opts,
                               const std::string& out_path) {
  if (opts.alphas.empty()) throw InvalidInput("collect_dataset: empty alpha list");
  if (opts.n_per_alpha < 1) throw InvalidInput("collect_dataset: n_per_alpha must be positive");

  using Key = std::tuple<double, std::uint64_t, std::uint64_t>;
  std::set<Key> existing;
  {
    std::ifstream probe(out_path);
    if (probe.good()) {
      probe.close();
      for (const DatasetRecord& r : read_dataset(out_path)) existing.emplace(r.alpha, r.seed, r.index);
    }
  }
  {
    std::ofstream touch(out_path, std::ios::app);
    if (!touch) throw std::runtime_error("cannot write dataset " + out_path);
  }

  CollectSummary summary;
  for (std::size_t a = 0; a < opts.alphas.size(); ++a) {
    const double alpha = opts.alphas[a];
    const std::unique_ptr<ProblemInstance> problem = factory(alpha);
    const UniformInit inits(*problem);
    const SearchRun run = multistart(*problem, inits, opts.n_per_alpha, opts.cutoff,
                                     derive_seed(opts.seed, a), opts.settings, opts.workers);
    std::vector<DatasetRecord> block;
    for (std::size_t i = 0; i < run.results.size(); ++i) {
      const SolveResult& s = run.results[i];
      ++summary.solves;
      if (!s.converged) continue;
      if (opts.good_threshold && !(s.objective <= -*opts.good_threshold)) continue;
      if (existing.count({alpha, s.seed, i}) != 0) {
        ++summary.skipped_existing;
        continue;
      }
      DatasetRecord r;
      r.problem_id = problem->id();
      r.alpha = alpha;
      r.x = s.x_star;
      r.objective = s.objective;
      r.feasibility = s.feasibility;
      r.solve_time = s.solve_time;
      r.converged = true;
      r.seed = s.seed;
      r.index = i;
      block.push_back(std::move(r));
    }
    append_records(out_path, block);
    summary.written += static_cast<int>(block.size());
  }
  return summary;
}

Matrix record_matrix(const std::vector<DatasetRecord>& records) {
  if (records.empty()) return Matrix();
  Matrix m(records.size(), records.front().x.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].x.size() != m.cols()) throw InvalidInput("records have mixed dimensions");
    m.row(i) = records[i].x.transpose();
  }
  return m;
}

Vector record_alphas(const std::vector<DatasetRecord>& records) {
  Vector a(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) a[i] = records[i].alpha;
  return a;
}

}  // namespace ags
