#include "ags/amortized.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ags/dejong.hpp"
#include "ags/transfer.hpp"

namespace ags {

std::unique_ptr<ProblemInstance> make_problem(const ProblemConfig& config, double alpha) {
  if (config.name == "dejong5") return std::make_unique<dejong::DeJongProblem>(alpha);
  if (config.name == "cr3bp_transfer")
    return std::make_unique<transfer::TransferProblem>(transfer::make_scenario(config.scenario),
                                                       alpha);
  throw InvalidInput("unknown problem '" + config.name + "'");
}

ProblemFactory make_factory(const ProblemConfig& config) {
  if (config.name != "cr3bp_transfer")
    return [config](double alpha) { return make_problem(config, alpha); };
  auto scenario = std::make_shared<const transfer::TransferScenario>(
      transfer::make_scenario(config.scenario));
  return [scenario](double alpha) -> std::unique_ptr<ProblemInstance> {
    return std::make_unique<transfer::TransferProblem>(*scenario, alpha);
  };
}

cvae::Architecture cvae_architecture(const ModelConfig& config) {
  cvae::Architecture a;
  if (config.cvae == "dejong")
    a = cvae::Architecture::dejong();
  else if (config.cvae == "transfer_full")
    a = cvae::Architecture::transfer_full();
  else if (config.cvae == "transfer_reduced")
    a = cvae::Architecture::transfer_reduced(config.shrink);
  else
    throw InvalidInput("unknown CVAE architecture '" + config.cvae + "'");
  if (config.components > 0) a.components = config.components;
  a.validate();
  return a;
}

controlgen::Architecture control_architecture(const ModelConfig& config, int sequence_length) {
  controlgen::Architecture a;
  a.encoder = config.control_encoder;
  a.lstm_hidden = config.lstm_hidden;
  a.lstm_layers = config.lstm_layers;
  a.sequence_length = sequence_length;
  a.validate();
  return a;
}

nlohmann::json AmortizedModel::to_json() {
  nlohmann::json j;
  j["format"] = "ags-checkpoint";
  j["version"] = kCheckpointVersion;
  j["metadata"] = {{"problem_id", problem_id},
                   {"components", cvae.architecture().components},
                   {"latent_dim", cvae.architecture().latent_dim()},
                   {"data_dim", cvae.architecture().data_dim()},
                   {"training_seed", training_seed}};
  j["cvae"] = cvae.to_json();
  j["control"] = control ? control->to_json() : nlohmann::json(nullptr);
  return j;
}

AmortizedModel AmortizedModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ags-checkpoint") throw InvalidInput("not a checkpoint file");
  if (j.value("version", -1) != kCheckpointVersion)
    throw InvalidInput("unsupported checkpoint version");
  AmortizedModel m;
  const auto& meta = j.at("metadata");
  m.problem_id = meta.at("problem_id").get<std::string>();
  m.training_seed = meta.at("training_seed").get<std::uint64_t>();
  m.cvae = cvae::Model::from_json(j.at("cvae"));
  if (meta.at("components").get<int>() != m.cvae.architecture().components ||
      meta.at("latent_dim").get<int>() != m.cvae.architecture().latent_dim())
    throw InvalidInput("checkpoint metadata does not match the CVAE block");
  if (!j.at("control").is_null()) m.control = controlgen::Model::from_json(j.at("control"));
  return m;
}

void AmortizedModel::save(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << to_json().dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

AmortizedModel AmortizedModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("checkpoint " + path + ": " + e.what());
  }
  return from_json(j);
}

namespace {

struct ControlData {
  Matrix inputs;                   // rows x 5
  std::vector<Matrix> targets;     // rows of N x 3
};

ControlData control_data(const std::vector<DatasetRecord>& records, const Matrix& normalized,
                         int n_segments) {
  ControlData d;
  const auto rows = static_cast<Eigen::Index>(records.size());
  d.inputs.resize(rows, 5);
  d.targets.reserve(records.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    d.inputs.row(r).head<4>() = normalized.row(r);
    d.inputs(r, 4) = records[r].alpha;
    Matrix u(n_segments, 3);
    for (int k = 0; k < n_segments; ++k)
      u.row(k) = transfer::clamp_throttle(records[r].x.segment<3>(4 + 3 * k)).transpose();
    d.targets.push_back(std::move(u));
  }
  return d;
}

double tail_loss(const cvae::TrainReport& report) {
  const auto& l = report.epoch_loss;
  if (l.empty()) return 0.0;
  const std::size_t n = std::min<std::size_t>(10, l.size());
  double sum = 0.0;
  for (std::size_t i = l.size() - n; i < l.size(); ++i) sum += l[i];
  return sum / static_cast<double>(n);
}

TrainingOutcome train_once(const std::vector<DatasetRecord>& records, const Config& config,
                           std::uint64_t seed) {
  const cvae::Architecture arch = cvae_architecture(config.model);
  const int data_dim = arch.data_dim();
  const int full_dim = static_cast<int>(records.front().x.size());
  if (full_dim < data_dim) throw InvalidInput("train: records are shorter than the CVAE input");
  const bool with_control = config.model.control;
  int n_segments = 0;
  if (with_control) {
    if (data_dim != 4 || (full_dim - 4) % 3 != 0)
      throw InvalidInput("train: the control model needs transfer records");
    n_segments = (full_dim - 4) / 3;
  }

  std::vector<Vector> rows;
  rows.reserve(records.size());
  for (const DatasetRecord& r : records) {
    if (r.x.size() != full_dim) throw InvalidInput("train: records have mixed dimensions");
    rows.push_back(r.x.head(data_dim));
  }

  TrainingOutcome out;
  AmortizedModel& m = out.model;
  m.problem_id = records.front().problem_id;
  m.training_seed = seed;
  m.cvae = cvae::Model(arch, derive_seed(seed, 1));
  m.cvae.normalization() = fit_normalization(rows);
  Matrix x(records.size(), data_dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    x.row(i) = m.cvae.normalization().apply(rows[i]).transpose();
  const Vector alpha = record_alphas(records);

  cvae::TrainOptions opts;
  opts.epochs = config.train.epochs;
  opts.batch = config.train.batch;
  opts.adam.lr = config.train.lr;
  opts.seed = derive_seed(seed, 2);
  opts.loss.recon_weight = config.train.recon_weight;
  opts.divergence_limit = config.train.divergence_limit;

  if (!with_control) {
    out.report = cvae::train(m.cvae, x, alpha, opts);
    return out;
  }

  m.control = controlgen::Model(control_architecture(config.model, n_segments), derive_seed(seed, 3));
  const ControlData data = control_data(records, x, n_segments);
  controlgen::Model& ctrl = *m.control;
  const double weight = config.train.control_weight;
  cvae::ExtraLoss extra = [&](const std::vector<int>& idx, bool with_grad) {
    const auto b = static_cast<Eigen::Index>(idx.size());
    Matrix in(b, 5);
    nn::Sequence target(n_segments, Matrix(b, 3));
    for (Eigen::Index r = 0; r < b; ++r) {
      in.row(r) = data.inputs.row(idx[r]);
      for (int t = 0; t < n_segments; ++t) target[t].row(r) = data.targets[idx[r]].row(t);
    }
    controlgen::Model::Tape tape;
    const nn::Sequence pred = ctrl.forward(in, with_grad ? &tape : nullptr);
    nn::Sequence grad;
    const double loss = controlgen::control_loss(pred, target, with_grad ? &grad : nullptr);
    if (with_grad) {
      for (Matrix& g : grad) g *= weight;
      ctrl.backward(tape, grad);
    }
    return weight * loss;
  };
  out.report = cvae::train(m.cvae, x, alpha, opts, extra, ctrl.params());
  return out;
}

}  // namespace

TrainingOutcome train_amortized(const std::vector<DatasetRecord>& records, const Config& config,
                                std::uint64_t seed) {
  if (records.empty()) throw InvalidInput("train: empty dataset");
  if (config.train.restarts < 1) throw InvalidInput("train: restarts must be positive");
  std::optional<TrainingOutcome> best;
  std::vector<double> scores;
  for (int r = 0; r < config.train.restarts; ++r) {
    TrainingOutcome t = train_once(records, config, r == 0 ? seed : derive_seed(seed, 1000 + r));
    const double score = tail_loss(t.report);
    scores.push_back(score);
    if (!best || score < best->tail_loss) {
      t.restart = r;
      t.tail_loss = score;
      best = std::move(t);
    }
  }
  best->restart_tail_losses = std::move(scores);
  return std::move(*best);
}

std::vector<Vector> predict_solutions(const AmortizedModel& model, const ProblemInstance& problem,
                                      double alpha, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("predict: n must be positive");
  const int data_dim = model.cvae.architecture().data_dim();
  const int dim = problem.dimension();
  if (data_dim > dim) throw InvalidInput("predict: model does not fit the problem");
  const cvae::SampleSet s = model.cvae.sample(alpha, n, seed);
  std::vector<Vector> out;
  out.reserve(n);
  if (data_dim == dim) {
    for (int i = 0; i < n; ++i) out.push_back(problem.clamp_to_bounds(s.x.row(i).transpose()));
    return out;
  }
  if (!model.control) throw InvalidInput("predict: the problem needs a control model");
  const int n_segments = model.control->architecture().sequence_length;
  if (data_dim + 3 * n_segments != dim) throw InvalidInput("predict: control length mismatch");
  Matrix in(n, 5);
  for (int i = 0; i < n; ++i) {
    in.row(i).head(4) = model.cvae.normalization().apply(s.x.row(i).transpose()).transpose();
    in(i, 4) = alpha;
  }
  const std::vector<Matrix> u = model.control->predict(in);
  for (int i = 0; i < n; ++i) {
    Vector x(dim);
    x.head(data_dim) = s.x.row(i).transpose();
    for (int k = 0; k < n_segments; ++k) x.segment<3>(data_dim + 3 * k) = u[i].row(k).transpose();
    out.push_back(problem.clamp_to_bounds(x));
  }
  return out;
}

double good_threshold(const ProblemConfig& config) {
  return config.good_threshold ? *config.good_threshold : -std::numeric_limits<double>::infinity();
}

Comparison warm_start_comparison(const AmortizedModel& model, const ProblemInstance& problem,
                                 const SearchConfig& search, const LocalSolverSettings& settings,
                                 double threshold, std::uint64_t seed) {
  Comparison c;
  const double alpha = problem.alpha()[0];
  for (int r = 0; r < search.rounds; ++r) {
    const std::uint64_t round_seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    const ListInit warm("generative-model",
                        predict_solutions(model, problem, alpha, search.n_inits,
                                          derive_seed(round_seed, 1)));
    const UniformInit uniform(problem);
    c.warm.push_back(multistart(problem, warm, search.n_inits, search.cutoff,
                                derive_seed(round_seed, 3), settings, search.workers));
    c.uniform.push_back(multistart(problem, uniform, search.n_inits, search.cutoff,
                                   derive_seed(round_seed, 2), settings, search.workers));
    recheck_run(problem, c.warm.back(), settings.auglag.tol_feas);
    recheck_run(problem, c.uniform.back(), settings.auglag.tol_feas);
  }
  c.report = compare_report(c.warm, c.uniform, threshold);
  return c;
}

}  // namespace ags
