#pragma once

#include <array>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "ags/problem.hpp"
#include "ags/solver.hpp"

namespace ags::dejong {

using Point = Eigen::Vector2d;
using Minima = Eigen::Matrix<double, 2, 8>;

inline constexpr double kAlphaMin = 0.0;
inline constexpr double kAlphaMax = std::numbers::pi / 2.0;
inline constexpr double kDomain = 50.0;  // x in [-50, 50]^2

/// Base minima locations (two clusters of four) and their rotation.
struct MinimaMatrix {
  Minima a;
  Minima a_bar;
  double alpha = 0.0;
};

const Minima& base_minima();

/// a_bar = R(alpha) a. Alpha outside [0, pi/2] is clamped with a warning.
MinimaMatrix rotate_minima(double alpha);

/// (0.002 + sum_i 1 / (1 + (x1 - a1i)^6 + (x2 - a2i)^6))^-1
double value(const Point& x, const MinimaMatrix& m);

Point gradient(const Point& x, const MinimaMatrix& m);

struct GroundTruth {
  std::array<Point, 8> minima;
  std::array<int, 8> cluster;  // 0 for columns 1-4, 1 for columns 5-8
};

/// Local minima obtained by BFGS refinement from each rotated column.
GroundTruth ground_truth_minima(double alpha, double tol = 1e-10);

/// Distance from p to the nearest ground-truth minimum, and its index.
std::pair<double, int> nearest_minimum(const GroundTruth& gt, const Point& p);

/// Regular n x n grid of cell centers over [-50, 50]^2.
std::vector<Vector> grid_starts(int points_per_axis);

/// The rotated De Jong 5th function as a problem instance.
class DeJongProblem final : public ProblemInstance {
 public:
  explicit DeJongProblem(double alpha);

  std::string id() const override { return "dejong5"; }
  Vector objective_gradient(const Vector& x) const override;
  FirstOrder evaluate_first_order(const Vector& x) const override;
  const MinimaMatrix& minima() const { return minima_; }

 protected:
  double objective_impl(const Vector& x) const override;
  ConstraintValues constraints_impl(const Vector& x) const override;

 private:
  MinimaMatrix minima_;
};

/// BFGS options used for data collection and ground truth.
BfgsOptions default_bfgs_options();

}  // namespace ags::dejong
