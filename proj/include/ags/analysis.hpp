#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ags/dataset.hpp"
#include "ags/search.hpp"

namespace ags {

/// Time of flight of a transfer decision vector: the sum of its three times.
double time_of_flight(const Vector& x);

struct Histogram {
  double origin = 0.0;     // left edge of bin 0
  double bin_width = 0.5;
  std::vector<int> counts;
  std::vector<double> peaks;    // centers of the peak bins, increasing
  std::vector<int> peak_bins;

  double bin_center(int b) const { return origin + (b + 0.5) * bin_width; }
  nlohmann::json to_json() const;
};

/// Fixed-width histogram. A peak is a maximal run of equal bins higher than
/// both neighbours whose topographic prominence reaches `prominence` times
/// the highest bin.
Histogram histogram_with_peaks(const std::vector<double>& values, double bin_width = 0.5,
                               double prominence = 0.2);

/// Histogram of record times of flight.
Histogram tof_histogram(const std::vector<DatasetRecord>& records, double bin_width = 0.5,
                        double prominence = 0.2);

struct HyperplaneSummary {
  std::vector<double> tof;          // per record
  std::vector<double> projection;   // (dt_s, dt_ci, dt_cf) . (1,1,1)/sqrt(3)
  std::vector<double> peak_centers; // histogram peak positions
  std::vector<double> centers;      // mean time of flight of each plane's members
  std::vector<double> std_dev;      // within-plane standard deviation of the time of flight
  std::vector<int> label;           // plane index per record, -1 when off every plane
  std::vector<int> counts;          // members per plane
  int unassigned = 0;

  int planes() const { return static_cast<int>(peak_centers.size()); }
  nlohmann::json to_json() const;
};

struct HyperplaneOptions {
  double bin_width = 0.5;
  double prominence = 0.2;
  // records farther than this from every peak (in time of flight) are off-plane
  double assignment_radius = 0.5;
};

/// One-dimensional clustering of the time-of-flight projection by nearest
/// histogram peak. Requires at least two records.
HyperplaneSummary hyperplane_clusters(const std::vector<DatasetRecord>& records,
                                      const HyperplaneOptions& opts = {});

struct ArmSummary {
  std::string init_source;
  SearchStats stats;
  std::vector<double> good_times;
};

struct RoundSummary {
  ArmSummary warm;
  ArmSummary uniform;
};

struct CompareReport {
  std::string problem_id;
  double alpha = 0.0;
  int n_inits = 0;
  double cutoff = 0.0;
  double threshold = 0.0;
  std::vector<RoundSummary> rounds;
  int warm_total = 0;
  int uniform_total = 0;
  int rounds_warm_not_worse = 0;

  /// warm_total / uniform_total; infinity when the uniform arm found nothing
  /// and warm did, 1 when both are empty.
  double ratio() const;
  nlohmann::json to_json() const;
  /// Per-round counts and solve-time quartiles.
  std::string rounds_csv() const;
  /// Histogram of good solve times of both arms, pooled over rounds.
  std::string solve_time_histogram_csv(double bin_width) const;
};

/// Side-by-side statistics of paired warm/uniform runs, one pair per round.
/// Runs must share problem, alpha, n_inits and cutoff.
CompareReport compare_report(const std::vector<SearchRun>& warm,
                             const std::vector<SearchRun>& uniform, double threshold);

/// One solve as JSON; the wall time is left out so reports are reproducible.
nlohmann::json solve_result_to_json(const SolveResult& r);

/// CSV of the time triples and time of flight of every record.
std::string tof_scatter_csv(const std::vector<DatasetRecord>& records,
                            const HyperplaneSummary& summary);

}  // namespace ags
