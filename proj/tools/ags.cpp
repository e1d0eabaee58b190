#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ags/amortized.hpp"
#include "ags/analysis.hpp"
#include "ags/dejong.hpp"

namespace fs = std::filesystem;
using namespace ags;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

struct Context {
  Config config;
  fs::path out;
};

Context prepare(const Common& c) {
  Context ctx;
  ctx.config = load_config(c.config_path);
  if (c.seed) ctx.config.search.seed = *c.seed;
  ctx.out = c.out;
  fs::create_directories(ctx.out);
  return ctx;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json report_header(const std::string& command, const Context& ctx) {
  return {{"command", command}, {"config", ctx.config.to_json()}};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void run_collect(const Common& common) {
  Context ctx = prepare(common);
  const Config& c = ctx.config;
  CollectOptions o;
  o.alphas = c.problem.alpha_list();
  o.n_per_alpha = c.search.n_per_alpha;
  o.cutoff = c.search.collect_cutoff;
  o.seed = c.search.seed;
  o.good_threshold = c.problem.good_threshold;
  o.settings = c.solver.settings();
  o.workers = c.search.workers;
  const fs::path data = ctx.out / "dataset.jsonl";
  const CollectSummary s = collect_dataset(make_factory(c.problem), o, data.string());
  const auto records = read_dataset(data.string());
  std::map<double, int> per_alpha;
  for (const auto& r : records) ++per_alpha[r.alpha];
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [a, n] : per_alpha) counts.push_back({{"alpha", a}, {"records", n}});
  nlohmann::json rep = report_header("collect", ctx);
  rep["solves"] = s.solves;
  rep["written"] = s.written;
  rep["skipped_existing"] = s.skipped_existing;
  rep["records"] = records.size();
  rep["per_alpha"] = counts;
  write_json(ctx.out / "collect_report.json", rep);
  std::cout << "collect: " << records.size() << " records in " << data.string() << "\n";
}

void run_train(const Common& common, const std::string& data_path) {
  Context ctx = prepare(common);
  const auto records = read_dataset(data_path);
  TrainingOutcome t = train_amortized(records, ctx.config, ctx.config.search.seed);
  t.model.save((ctx.out / "model.json").string());
  std::ostringstream csv;
  csv << "epoch,loss,extra_loss\n";
  for (std::size_t e = 0; e < t.report.epoch_loss.size(); ++e)
    csv << e << ',' << fmt(t.report.epoch_loss[e]) << ',' << fmt(t.report.epoch_extra_loss[e]) << '\n';
  write_text(ctx.out / "loss.csv", csv.str());
  nlohmann::json rep = report_header("train", ctx);
  rep["dataset"] = fs::path(data_path).filename().string();
  rep["records"] = records.size();
  rep["parameters"] = t.model.cvae.parameter_count() +
                      (t.model.control ? t.model.control->parameter_count() : 0);
  rep["final_loss"] = t.report.epoch_loss.empty() ? 0.0 : t.report.epoch_loss.back();
  rep["restart"] = t.restart;
  rep["restart_tail_losses"] = t.restart_tail_losses;
  write_json(ctx.out / "train_report.json", rep);
  std::cout << "train: model written to " << (ctx.out / "model.json").string() << "\n";
}

void run_predict(const Common& common, const std::string& model_path, double alpha,
                 std::optional<int> n) {
  Context ctx = prepare(common);
  const AmortizedModel model = AmortizedModel::load(model_path);
  const auto problem = make_problem(ctx.config.problem, alpha);
  const int count = n.value_or(ctx.config.train.samples);
  const auto xs = predict_solutions(model, *problem, alpha, count, ctx.config.search.seed);
  std::ostringstream csv;
  for (int i = 0; i < problem->dimension(); ++i) csv << (i ? "," : "") << "x" << i;
  csv << '\n';
  for (const Vector& x : xs) {
    for (Eigen::Index i = 0; i < x.size(); ++i) csv << (i ? "," : "") << fmt(x[i]);
    csv << '\n';
  }
  write_text(ctx.out / "predictions.csv", csv.str());
  nlohmann::json rep = report_header("predict", ctx);
  rep["model"] = fs::path(model_path).filename().string();
  rep["alpha"] = alpha;
  rep["samples"] = count;
  if (problem->id() == "dejong5") {
    const auto gt = dejong::ground_truth_minima(alpha);
    int within = 0;
    std::vector<int> clusters(2, 0), wells(8, 0);
    for (const Vector& x : xs) {
      const auto [d, i] = dejong::nearest_minimum(gt, x);
      if (d <= 3.0) ++within;
      ++clusters[gt.cluster[i]];
      ++wells[i];
    }
    rep["within_3"] = static_cast<double>(within) / count;
    rep["cluster_share"] = {static_cast<double>(clusters[0]) / count,
                            static_cast<double>(clusters[1]) / count};
    rep["nearest_well_counts"] = wells;
  }
  write_json(ctx.out / "predict_report.json", rep);
  std::cout << "predict: " << count << " samples in " << (ctx.out / "predictions.csv").string()
            << "\n";
}

void run_search(const Common& common, const std::optional<std::string>& model_path,
                const std::optional<std::string>& inits_path, std::optional<double> alpha_opt) {
  Context ctx = prepare(common);
  const Config& c = ctx.config;
  const double alpha = alpha_opt.value_or(c.search.alpha_prime);
  const auto problem = make_problem(c.problem, alpha);
  const LocalSolverSettings settings = c.solver.settings();
  std::unique_ptr<InitSource> source;
  if (model_path && inits_path) throw InvalidInput("search: use either --model or --inits");
  if (model_path) {
    const AmortizedModel model = AmortizedModel::load(*model_path);
    source = std::make_unique<ListInit>(
        "generative-model",
        predict_solutions(model, *problem, alpha, c.search.n_inits, derive_seed(c.search.seed, 1)));
  } else if (inits_path) {
    std::vector<Vector> inits;
    for (const auto& r : read_dataset(*inits_path, problem->dimension())) inits.push_back(r.x);
    source = std::make_unique<ListInit>("file", std::move(inits));
  } else {
    source = std::make_unique<UniformInit>(*problem);
  }
  SearchRun run;
  if (c.search.hops > 0) {
    if (source->name() != "uniform") throw InvalidInput("search: basin hopping samples its own inits");
    run = mbh_search(*problem, c.search.hops, Perturbation::parse(c.search.perturbation),
                     c.search.cutoff, c.search.seed, settings);
  } else {
    run = multistart(*problem, *source, c.search.n_inits, c.search.cutoff, c.search.seed, settings,
                     c.search.workers);
  }
  const int demoted = recheck_run(*problem, run, settings.auglag.tol_feas);
  std::ostringstream lines;
  for (const SolveResult& r : run.results) lines << solve_result_to_json(r).dump() << '\n';
  write_text(ctx.out / "search_run.jsonl", lines.str());
  const double threshold = good_threshold(c.problem);
  const auto good = filter_good(run.results, threshold);
  const SearchStats s = solve_time_stats(good, threshold);
  nlohmann::json rep = report_header("search", ctx);
  rep["alpha"] = alpha;
  rep["init_source"] = run.init_source;
  rep["n_inits"] = run.n_inits;
  rep["cutoff"] = run.cutoff;
  rep["converged"] = filter_converged(run.results).size();
  rep["recheck_failed"] = demoted;
  rep["stats"] = {{"empty", s.empty}, {"good_count", s.good_count}, {"mean", s.mean},
                  {"min", s.min},     {"q25", s.q25},               {"q50", s.q50}};
  write_json(ctx.out / "search_stats.json", rep);
  std::cout << "search: " << s.good_count << " good of " << run.n_inits << "\n";
}

void run_analyze(const Common& common, const std::string& data_path) {
  Context ctx = prepare(common);
  const auto records = read_dataset(data_path);
  nlohmann::json rep = report_header("analyze", ctx);
  rep["dataset"] = fs::path(data_path).filename().string();
  rep["records"] = records.size();
  std::map<double, std::vector<DatasetRecord>> by_alpha;
  for (const auto& r : records) by_alpha[r.alpha].push_back(r);
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [a, rs] : by_alpha) {
    nlohmann::json e{{"alpha", a}, {"records", rs.size()}};
    if (ctx.config.problem.name == "cr3bp_transfer" && rs.size() >= 2) {
      const HyperplaneSummary h = hyperplane_clusters(rs);
      e["hyperplanes"] = {{"planes", h.planes()},   {"centers", h.centers},
                          {"std_dev", h.std_dev},   {"counts", h.counts},
                          {"unassigned", h.unassigned}};
    }
    per.push_back(e);
  }
  rep["per_alpha"] = per;
  if (ctx.config.problem.name == "cr3bp_transfer" && records.size() >= 2) {
    const Histogram hist = tof_histogram(records);
    const HyperplaneSummary h = hyperplane_clusters(records);
    rep["tof_histogram"] = hist.to_json();
    rep["hyperplanes"] = h.to_json();
    std::ostringstream csv;
    csv << "bin_left,bin_right,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b)
      csv << fmt(hist.origin + b * hist.bin_width) << ','
          << fmt(hist.origin + (b + 1) * hist.bin_width) << ',' << hist.counts[b] << '\n';
    write_text(ctx.out / "tof_histogram.csv", csv.str());
    write_text(ctx.out / "tof_scatter.csv", tof_scatter_csv(records, h));
  }
  write_json(ctx.out / "analysis.json", rep);
  std::cout << "analyze: report in " << (ctx.out / "analysis.json").string() << "\n";
}

void run_compare(const Common& common, const std::string& model_path, std::optional<double> alpha_opt) {
  Context ctx = prepare(common);
  const Config& c = ctx.config;
  const double alpha = alpha_opt.value_or(c.search.alpha_prime);
  const auto problem = make_problem(c.problem, alpha);
  const AmortizedModel model = AmortizedModel::load(model_path);
  const Comparison cmp = warm_start_comparison(model, *problem, c.search, c.solver.settings(),
                                               good_threshold(c.problem), c.search.seed);
  nlohmann::json rep = report_header("compare", ctx);
  rep["model"] = fs::path(model_path).filename().string();
  rep["comparison"] = cmp.report.to_json();
  write_json(ctx.out / "compare_report.json", rep);
  write_text(ctx.out / "rounds.csv", cmp.report.rounds_csv());
  write_text(ctx.out / "solve_time_histogram.csv",
             cmp.report.solve_time_histogram_csv(std::max(1e-3, c.search.cutoff / 20.0)));
  std::cout << "compare: warm " << cmp.report.warm_total << " vs uniform "
            << cmp.report.uniform_total << " good solutions over " << c.search.rounds
            << " rounds\n";
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "INI configuration file")->required()->check(
      CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "override [search] seed");
  sub->add_option("--out", c.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Amortized global search for parameterized trajectory problems"};
  app.require_subcommand(1);

  Common collect_c, train_c, predict_c, search_c, analyze_c, compare_c;
  std::string data_path, model_path;
  std::optional<std::string> search_model, search_inits;
  std::optional<double> alpha;
  std::optional<int> n_samples;

  auto* collect = app.add_subcommand("collect", "multistart over the alpha grid, write a dataset");
  add_common(collect, collect_c);

  auto* train = app.add_subcommand("train", "train the generative model on a dataset");
  add_common(train, train_c);
  train->add_option("--data", data_path, "dataset (JSON Lines)")->required()->check(CLI::ExistingFile);

  auto* predict = app.add_subcommand("predict", "sample predicted solutions at one alpha");
  add_common(predict, predict_c);
  predict->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--alpha", alpha, "problem parameter")->required();
  predict->add_option("-n,--samples", n_samples, "number of samples");

  auto* search = app.add_subcommand("search", "multistart (or basin hopping) at one alpha");
  add_common(search, search_c);
  search->add_option("--model", search_model, "warm start from this checkpoint")
      ->check(CLI::ExistingFile);
  search->add_option("--inits", search_inits, "initializations from a dataset file")
      ->check(CLI::ExistingFile);
  search->add_option("--alpha", alpha, "problem parameter (default [search] alpha_prime)");

  auto* analyze = app.add_subcommand("analyze", "time-of-flight histograms and hyperplanes");
  add_common(analyze, analyze_c);
  analyze->add_option("--data", data_path, "dataset (JSON Lines)")->required()->check(CLI::ExistingFile);

  auto* compare = app.add_subcommand("compare", "warm start against uniform sampling");
  add_common(compare, compare_c);
  compare->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  compare->add_option("--alpha", alpha, "problem parameter (default [search] alpha_prime)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*collect) run_collect(collect_c);
    if (*train) run_train(train_c, data_path);
    if (*predict) run_predict(predict_c, model_path, *alpha, n_samples);
    if (*search) run_search(search_c, search_model, search_inits, alpha);
    if (*analyze) run_analyze(analyze_c, data_path);
    if (*compare) run_compare(compare_c, model_path, alpha);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
