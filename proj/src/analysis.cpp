#include "ags/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ags {

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json stats_json(const SearchStats& s) {
  return {{"empty", s.empty},   {"good_count", s.good_count}, {"threshold", finite_or_null(s.threshold)},
          {"mean", s.mean},     {"min", s.min},               {"q25", s.q25},
          {"q50", s.q50}};
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double time_of_flight(const Vector& x) {
  if (x.size() < 3) throw InvalidInput("time_of_flight: vector has fewer than three entries");
  return x[0] + x[1] + x[2];
}

nlohmann::json Histogram::to_json() const {
  return {{"origin", origin},   {"bin_width", bin_width}, {"counts", counts},
          {"peaks", peaks},     {"peak_bins", peak_bins}};
}

Histogram histogram_with_peaks(const std::vector<double>& values, double bin_width,
                               double prominence) {
  if (!(bin_width > 0.0)) throw InvalidInput("histogram: bin width must be positive");
  if (!(prominence >= 0.0)) throw InvalidInput("histogram: prominence must be non-negative");
  Histogram h;
  h.bin_width = bin_width;
  if (values.empty()) return h;
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidInput("histogram: non-finite value");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.origin = std::floor(*lo / bin_width) * bin_width;
  const int n = static_cast<int>(std::floor((*hi - h.origin) / bin_width)) + 1;
  h.counts.assign(n, 0);
  for (double v : values) {
    const int b = std::min(n - 1, static_cast<int>(std::floor((v - h.origin) / bin_width)));
    ++h.counts[b];
  }

  // zero padding on both sides so edge bins can be peaks
  std::vector<int> c(n + 2, 0);
  std::copy(h.counts.begin(), h.counts.end(), c.begin() + 1);
  const int top = *std::max_element(h.counts.begin(), h.counts.end());
  const double needed = prominence * top;
  for (int i = 1; i <= n;) {
    int j = i;
    while (j + 1 <= n && c[j + 1] == c[i]) ++j;
    if (c[i] > 0 && c[i - 1] < c[i] && c[j + 1] < c[i]) {
      int left_min = c[i];
      for (int k = i - 1; k >= 0 && c[k] <= c[i]; --k) left_min = std::min(left_min, c[k]);
      int right_min = c[i];
      for (int k = j + 1; k < n + 2 && c[k] <= c[i]; ++k) right_min = std::min(right_min, c[k]);
      const int base = std::max(left_min, right_min);
      if (c[i] - base >= needed) {
        const double mid = 0.5 * ((i - 1) + (j - 1));
        h.peaks.push_back(h.origin + (mid + 0.5) * bin_width);
        h.peak_bins.push_back(static_cast<int>(std::floor(mid)));
      }
    }
    i = j + 1;
  }
  return h;
}

Histogram tof_histogram(const std::vector<DatasetRecord>& records, double bin_width,
                        double prominence) {
  std::vector<double> tofs;
  tofs.reserve(records.size());
  for (const DatasetRecord& r : records) tofs.push_back(time_of_flight(r.x));
  return histogram_with_peaks(tofs, bin_width, prominence);
}

nlohmann::json HyperplaneSummary::to_json() const {
  return {{"planes", planes()},        {"peak_centers", peak_centers}, {"centers", centers},
          {"std_dev", std_dev},        {"counts", counts},             {"unassigned", unassigned},
          {"label", label}};
}

HyperplaneSummary hyperplane_clusters(const std::vector<DatasetRecord>& records,
                                      const HyperplaneOptions& opts) {
  if (records.size() < 2) throw InvalidInput("hyperplane_clusters: need at least two records");
  if (!(opts.assignment_radius > 0.0))
    throw InvalidInput("hyperplane_clusters: assignment radius must be positive");
  HyperplaneSummary s;
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  for (const DatasetRecord& r : records) {
    s.tof.push_back(time_of_flight(r.x));
    s.projection.push_back(s.tof.back() * inv_sqrt3);
  }
  const Histogram h = histogram_with_peaks(s.tof, opts.bin_width, opts.prominence);
  s.peak_centers = h.peaks;
  const int k = s.planes();
  s.label.assign(records.size(), -1);
  s.counts.assign(k, 0);
  std::vector<double> sum(k, 0.0);
  for (std::size_t i = 0; i < s.tof.size(); ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int p = 0; p < k; ++p) {
      const double d = std::abs(s.tof[i] - s.peak_centers[p]);
      if (d < best_d) best_d = d, best = p;
    }
    if (best < 0 || best_d > opts.assignment_radius) {
      ++s.unassigned;
      continue;
    }
    s.label[i] = best;
    ++s.counts[best];
    sum[best] += s.tof[i];
  }
  s.centers.assign(k, 0.0);
  s.std_dev.assign(k, 0.0);
  for (int p = 0; p < k; ++p)
    if (s.counts[p] > 0) s.centers[p] = sum[p] / s.counts[p];
  for (std::size_t i = 0; i < s.tof.size(); ++i)
    if (s.label[i] >= 0) {
      const double d = s.tof[i] - s.centers[s.label[i]];
      s.std_dev[s.label[i]] += d * d;
    }
  for (int p = 0; p < k; ++p)
    if (s.counts[p] > 0) s.std_dev[p] = std::sqrt(s.std_dev[p] / s.counts[p]);
  return s;
}

double CompareReport::ratio() const {
  if (uniform_total == 0) return warm_total == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(warm_total) / uniform_total;
}

nlohmann::json CompareReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const RoundSummary& r : rounds)
    rs.push_back({{"warm", {{"init_source", r.warm.init_source}, {"stats", stats_json(r.warm.stats)}}},
                  {"uniform",
                   {{"init_source", r.uniform.init_source}, {"stats", stats_json(r.uniform.stats)}}}});
  std::vector<double> warm_times, uniform_times;
  for (const RoundSummary& r : rounds) {
    warm_times.insert(warm_times.end(), r.warm.good_times.begin(), r.warm.good_times.end());
    uniform_times.insert(uniform_times.end(), r.uniform.good_times.begin(),
                         r.uniform.good_times.end());
  }
  nlohmann::json j;
  j["problem_id"] = problem_id;
  j["alpha"] = alpha;
  j["n_inits"] = n_inits;
  j["cutoff"] = cutoff;
  j["threshold"] = finite_or_null(threshold);
  j["rounds"] = rs;
  j["warm_total"] = warm_total;
  j["uniform_total"] = uniform_total;
  j["ratio"] = finite_or_null(ratio());
  j["rounds_warm_not_worse"] = rounds_warm_not_worse;
  auto pooled = [&](const std::vector<double>& t) {
    std::vector<SolveResult> rs2(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) rs2[i].solve_time = t[i];
    return stats_json(solve_time_stats(rs2, threshold));
  };
  j["pooled"] = {{"warm", pooled(warm_times)}, {"uniform", pooled(uniform_times)}};
  return j;
}

std::string CompareReport::rounds_csv() const {
  std::ostringstream os;
  os << "round,arm,good_count,mean,min,q25,q50,q75,max\n";
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    for (const ArmSummary* arm : {&rounds[r].warm, &rounds[r].uniform}) {
      os << r << ',' << arm->init_source << ',' << arm->stats.good_count;
      if (arm->good_times.empty()) {
        os << ",,,,,,\n";
        continue;
      }
      const std::vector<double>& t = arm->good_times;
      os << ',' << format_double(arm->stats.mean) << ',' << format_double(arm->stats.min) << ','
         << format_double(arm->stats.q25) << ',' << format_double(arm->stats.q50) << ','
         << format_double(quantile(t, 0.75)) << ','
         << format_double(*std::max_element(t.begin(), t.end())) << '\n';
    }
  }
  return os.str();
}

std::string CompareReport::solve_time_histogram_csv(double bin_width) const {
  if (!(bin_width > 0.0)) throw InvalidInput("solve-time histogram: bin width must be positive");
  std::vector<int> warm, uniform;
  auto add = [&](std::vector<int>& h, double t) {
    const auto b = static_cast<std::size_t>(std::max(0.0, std::floor(t / bin_width)));
    if (h.size() <= b) h.resize(b + 1, 0);
    ++h[b];
  };
  for (const RoundSummary& r : rounds) {
    for (double t : r.warm.good_times) add(warm, t);
    for (double t : r.uniform.good_times) add(uniform, t);
  }
  const std::size_t n = std::max(warm.size(), uniform.size());
  warm.resize(n, 0);
  uniform.resize(n, 0);
  std::ostringstream os;
  os << "bin_left,bin_right,warm,uniform\n";
  for (std::size_t b = 0; b < n; ++b)
    os << format_double(b * bin_width) << ',' << format_double((b + 1) * bin_width) << ','
       << warm[b] << ',' << uniform[b] << '\n';
  return os.str();
}

CompareReport compare_report(const std::vector<SearchRun>& warm,
                             const std::vector<SearchRun>& uniform, double threshold) {
  if (warm.empty() || warm.size() != uniform.size())
    throw InvalidInput("compare_report: need the same positive number of rounds per arm");
  CompareReport rep;
  const SearchRun& ref = warm.front();
  rep.problem_id = ref.problem_id;
  rep.alpha = ref.alpha;
  rep.n_inits = ref.n_inits;
  rep.cutoff = ref.cutoff;
  rep.threshold = threshold;
  auto check = [&](const SearchRun& r) {
    if (r.problem_id != ref.problem_id || r.alpha != ref.alpha || r.n_inits != ref.n_inits ||
        r.cutoff != ref.cutoff)
      throw InvalidInput("compare_report: runs use different protocols (problem, alpha, "
                         "n_inits or cutoff)");
  };
  auto arm = [&](const SearchRun& r) {
    ArmSummary a;
    a.init_source = r.init_source;
    const std::vector<SolveResult> good = filter_good(r.results, threshold);
    a.stats = solve_time_stats(good, threshold);
    for (const SolveResult& s : good) a.good_times.push_back(s.solve_time);
    return a;
  };
  for (std::size_t i = 0; i < warm.size(); ++i) {
    check(warm[i]);
    check(uniform[i]);
    RoundSummary rs{arm(warm[i]), arm(uniform[i])};
    rep.warm_total += rs.warm.stats.good_count;
    rep.uniform_total += rs.uniform.stats.good_count;
    if (rs.warm.stats.good_count >= rs.uniform.stats.good_count) ++rep.rounds_warm_not_worse;
    rep.rounds.push_back(std::move(rs));
  }
  return rep;
}

nlohmann::json solve_result_to_json(const SolveResult& r) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"x0", vec(r.x0)},
          {"x_star", vec(r.x_star)},
          {"objective", finite_or_null(r.objective)},
          {"feasibility", finite_or_null(r.feasibility)},
          {"stationarity", finite_or_null(r.stationarity)},
          {"iterations", r.iterations},
          {"outer_iterations", r.outer_iterations},
          {"solve_time", r.solve_time},
          {"converged", r.converged},
          {"seed", r.seed},
          {"status", r.status}};
}

std::string tof_scatter_csv(const std::vector<DatasetRecord>& records,
                            const HyperplaneSummary& summary) {
  if (summary.tof.size() != records.size())
    throw InvalidInput("tof_scatter_csv: summary does not match the records");
  std::ostringstream os;
  os << "alpha,dt_shooting,dt_coast_initial,dt_coast_final,tof,plane\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Vector& x = records[i].x;
    os << format_double(records[i].alpha) << ',' << format_double(x[0]) << ','
       << format_double(x[1]) << ',' << format_double(x[2]) << ','
       << format_double(summary.tof[i]) << ',' << summary.label[i] << '\n';
  }
  return os.str();
}

}  // namespace ags
