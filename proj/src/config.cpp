#include "ags/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ags/dejong.hpp"

namespace ags {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidInput("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw InvalidInput("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config: '" + key + "' expects true or false, got '" + v + "'");
}

const std::set<std::string> kSections{"problem", "solver", "search", "model", "train"};

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  void number(const std::string& key, double& out) {
    if (auto v = raw(key)) out = to_double(key, *v);
  }
  void integer(const std::string& key, int& out) {
    if (auto v = raw(key)) out = static_cast<int>(to_int(key, *v));
  }
  void seed(const std::string& key, std::uint64_t& out) {
    if (auto v = raw(key)) {
      const long long i = to_int(key, *v);
      if (i < 0) throw InvalidInput("config: '" + key + "' must be non-negative");
      out = static_cast<std::uint64_t>(i);
    }
  }
  void text(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  void flag(const std::string& key, bool& out) {
    if (auto v = raw(key)) out = to_bool(key, *v);
  }
  std::optional<std::string> raw(const std::string& key) {
    known_.insert(key);
    const auto dot = key.find('.');
    const auto section = tree_.get_child_optional(key.substr(0, dot));
    if (!section) return std::nullopt;
    const auto v = section->get_optional<std::string>(key.substr(dot + 1));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty())
        throw InvalidInput("config: key '" + section + "' outside any section");
      if (kSections.count(section) == 0)
        throw InvalidInput("config: unknown section [" + section + "]");
      for (const auto& [key, value] : body)
        if (known_.count(section + "." + key) == 0)
          throw InvalidInput("config: unknown key '" + key + "' in [" + section + "]");
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> known_;
};

Config from_tree(const pt::ptree& tree) {
  Config c;
  Reader r(tree);

  ProblemConfig& p = c.problem;
  r.text("problem.name", p.name);
  if (p.name != "dejong5" && p.name != "cr3bp_transfer")
    throw InvalidInput("config: unknown problem '" + p.name + "'");
  if (p.name == "cr3bp_transfer") {
    p.alphas = "0.2,0.3,0.5,0.7,1.0";
    p.good_threshold = 415.0;
  }
  r.text("problem.alphas", p.alphas);
  if (auto v = r.raw("problem.good_threshold"))
    p.good_threshold = v->empty() || *v == "none" ? std::nullopt
                                                  : std::optional<double>(to_double("good_threshold", *v));
  transfer::DeskScenarioSpec& s = p.scenario;
  r.number("problem.departure_radius", s.departure_radius);
  r.number("problem.departure_angle", s.departure_angle);
  r.number("problem.initial_mass", s.initial_mass);
  r.number("problem.lyapunov_amplitude", s.lyapunov_amplitude);
  r.number("problem.manifold_phase", s.manifold_phase);
  r.number("problem.manifold_epsilon", s.manifold_epsilon);
  r.number("problem.manifold_t_backward", s.manifold_t_backward);
  r.integer("problem.n_segments", s.n_segments);
  r.number("problem.dt_shooting_max", s.dt_shooting_max);
  r.number("problem.dt_coast_max", s.dt_coast_max);
  r.number("problem.throttle_smoothing", s.throttle_smoothing);

  SolverConfig& so = c.solver;
  std::string clock = to_string(so.clock);
  r.text("solver.clock", clock);
  so.clock = parse_clock_mode(clock);
  r.number("solver.bfgs_tol", so.bfgs_tol);
  r.integer("solver.bfgs_max_iter", so.bfgs_max_iter);
  r.number("solver.tol_feas", so.tol_feas);
  r.number("solver.tol_opt", so.tol_opt);
  r.integer("solver.max_outer", so.max_outer);
  r.integer("solver.max_inner_iter", so.max_inner_iter);
  std::string gradient = "analytic";
  r.text("solver.gradient", gradient);
  if (gradient == "analytic")
    so.gradient = GradientSource::kAnalytic;
  else if (gradient == "fd")
    so.gradient = GradientSource::kFiniteDifference;
  else
    throw InvalidInput("config: solver.gradient must be analytic or fd");

  SearchConfig& se = c.search;
  r.seed("search.seed", se.seed);
  r.integer("search.n_per_alpha", se.n_per_alpha);
  r.number("search.collect_cutoff", se.collect_cutoff);
  r.integer("search.workers", se.workers);
  r.integer("search.n_inits", se.n_inits);
  r.number("search.cutoff", se.cutoff);
  r.integer("search.rounds", se.rounds);
  r.number("search.alpha_prime", se.alpha_prime);
  r.text("search.perturbation", se.perturbation);
  Perturbation::parse(se.perturbation);
  r.integer("search.hops", se.hops);

  ModelConfig& m = c.model;
  r.text("model.cvae", m.cvae);
  if (m.cvae != "dejong" && m.cvae != "transfer_full" && m.cvae != "transfer_reduced")
    throw InvalidInput("config: model.cvae must be dejong, transfer_full or transfer_reduced");
  r.integer("model.shrink", m.shrink);
  r.integer("model.components", m.components);
  r.flag("model.control", m.control);
  if (auto v = r.raw("model.control_encoder")) m.control_encoder = parse_int_list(*v);
  r.integer("model.lstm_hidden", m.lstm_hidden);
  r.integer("model.lstm_layers", m.lstm_layers);

  TrainConfig& t = c.train;
  r.integer("train.epochs", t.epochs);
  r.integer("train.batch", t.batch);
  r.number("train.lr", t.lr);
  r.number("train.recon_weight", t.recon_weight);
  r.number("train.control_weight", t.control_weight);
  r.number("train.divergence_limit", t.divergence_limit);
  r.integer("train.restarts", t.restarts);
  r.integer("train.samples", t.samples);

  r.reject_unknown();
  if (se.n_per_alpha < 1 || se.n_inits < 1 || se.rounds < 1 || se.workers < 0 || se.hops < 0)
    throw InvalidInput("config: search counts must be positive");
  if (t.epochs < 0 || t.batch < 1 || !(t.lr > 0.0) || t.samples < 1 || t.restarts < 1)
    throw InvalidInput("config: bad training settings");
  if (m.shrink < 1 || m.components < 0) throw InvalidInput("config: bad model settings");
  c.problem.alpha_list();
  return c;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const std::string& item : split(s, ','))
    out.push_back(static_cast<int>(to_int("integer list", item)));
  if (out.empty()) throw InvalidInput("config: empty integer list");
  return out;
}

std::vector<double> ProblemConfig::alpha_list() const {
  std::vector<double> out;
  if (alphas.rfind("grid:", 0) == 0) {
    const auto parts = split(alphas.substr(5), ':');
    if (parts.size() != 3) throw InvalidInput("config: alpha grid must be grid:lo:hi:n");
    const double lo = to_double("alphas", parts[0]);
    const double hi = to_double("alphas", parts[1]);
    const long long n = to_int("alphas", parts[2]);
    if (n < 1 || hi < lo) throw InvalidInput("config: bad alpha grid");
    for (long long i = 0; i < n; ++i)
      out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  } else {
    for (const std::string& item : split(alphas, ',')) out.push_back(to_double("alphas", item));
  }
  if (out.empty()) throw InvalidInput("config: empty alpha list");
  return out;
}

LocalSolverSettings SolverConfig::settings() const {
  LocalSolverSettings s;
  s.bfgs = dejong::default_bfgs_options();
  s.bfgs.tol_opt = bfgs_tol;
  s.bfgs.max_iter = bfgs_max_iter;
  s.bfgs.clock = clock;
  s.auglag.tol_feas = tol_feas;
  s.auglag.tol_opt = tol_opt;
  s.auglag.max_outer = max_outer;
  s.auglag.max_inner_iter = max_inner_iter;
  s.auglag.gradient = gradient;
  s.auglag.clock = clock;
  return s;
}

nlohmann::json Config::to_json() const {
  const auto& s = problem.scenario;
  nlohmann::json j;
  j["problem"] = {{"name", problem.name},
                  {"alphas", problem.alphas},
                  {"good_threshold", problem.good_threshold ? nlohmann::json(*problem.good_threshold)
                                                            : nlohmann::json(nullptr)},
                  {"departure_radius", s.departure_radius},
                  {"departure_angle", s.departure_angle},
                  {"initial_mass", s.initial_mass},
                  {"lyapunov_amplitude", s.lyapunov_amplitude},
                  {"manifold_phase", s.manifold_phase},
                  {"manifold_epsilon", s.manifold_epsilon},
                  {"manifold_t_backward", s.manifold_t_backward},
                  {"n_segments", s.n_segments},
                  {"dt_shooting_max", s.dt_shooting_max},
                  {"dt_coast_max", s.dt_coast_max},
                  {"throttle_smoothing", s.throttle_smoothing}};
  j["solver"] = {{"clock", to_string(solver.clock)},
                 {"bfgs_tol", solver.bfgs_tol},
                 {"bfgs_max_iter", solver.bfgs_max_iter},
                 {"tol_feas", solver.tol_feas},
                 {"tol_opt", solver.tol_opt},
                 {"max_outer", solver.max_outer},
                 {"max_inner_iter", solver.max_inner_iter},
                 {"gradient", solver.gradient == GradientSource::kAnalytic ? "analytic" : "fd"}};
  j["search"] = {{"seed", search.seed},
                 {"n_per_alpha", search.n_per_alpha},
                 {"collect_cutoff", search.collect_cutoff},
                 {"workers", search.workers},
                 {"n_inits", search.n_inits},
                 {"cutoff", search.cutoff},
                 {"rounds", search.rounds},
                 {"alpha_prime", search.alpha_prime},
                 {"perturbation", search.perturbation},
                 {"hops", search.hops}};
  j["model"] = {{"cvae", model.cvae},
                {"shrink", model.shrink},
                {"components", model.components},
                {"control", model.control},
                {"control_encoder", model.control_encoder},
                {"lstm_hidden", model.lstm_hidden},
                {"lstm_layers", model.lstm_layers}};
  j["train"] = {{"epochs", train.epochs},
                {"batch", train.batch},
                {"lr", train.lr},
                {"recon_weight", train.recon_weight},
                {"control_weight", train.control_weight},
                {"divergence_limit", train.divergence_limit},
                {"restarts", train.restarts},
                {"samples", train.samples}};
  return j;
}

Config parse_config(const std::string& text) {
  std::istringstream in(text);
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  return from_tree(tree);
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ags
