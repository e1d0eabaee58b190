#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace ags {

// Each thread accumulates "work units" as it evaluates problem functions.
// One unit is one evaluation of the 7-state dynamics right-hand side (or one
// De Jong evaluation). Budgets expressed in work seconds are reproducible
// bit for bit; wall-clock budgets are not.
namespace work {

void add(double units);
double total();

/// Nominal cost of a unit, used to express work as seconds.
inline constexpr double kSecondsPerUnit = 5.0e-8;

}  // namespace work

enum class ClockMode { kWork, kWall };

ClockMode parse_clock_mode(const std::string& s);
std::string to_string(ClockMode mode);

/// Measures elapsed time of one solve in the configured clock.
class SolveClock {
 public:
  explicit SolveClock(ClockMode mode)
      : mode_(mode), start_units_(work::total()), start_wall_(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    return mode_ == ClockMode::kWork ? work_seconds() : wall_seconds();
  }

  double work_seconds() const { return (work::total() - start_units_) * work::kSecondsPerUnit; }

  double wall_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_wall_).count();
  }

  ClockMode mode() const { return mode_; }

 private:
  ClockMode mode_;
  double start_units_;
  std::chrono::steady_clock::time_point start_wall_;
};

}  // namespace ags
