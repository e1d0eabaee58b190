#pragma once

#include <string>
#include <vector>

#include "ags/cr3bp.hpp"
#include "ags/problem.hpp"

namespace ags::transfer {

using cr3bp::Cr3bpState;
using cr3bp::State7;
using cr3bp::Vec3;

/// Decoded decision vector: three times (TU), final mass (kg) and N
/// Cartesian throttle vectors.
struct ShootingVector {
  double dt_shooting = 0.0;
  double dt_coast_initial = 0.0;
  double dt_coast_final = 0.0;
  double m_f = 0.0;
  std::vector<Vec3> controls;

  int segments() const { return static_cast<int>(controls.size()); }
  double time_of_flight() const { return dt_coast_initial + dt_shooting + dt_coast_final; }
};

/// Layout: (dt_shooting, dt_coast_initial, dt_coast_final, m_f, u_1, ..., u_N).
ShootingVector decode_vector(const Vector& x, int n_segments);
Vector encode_vector(const ShootingVector& sv);

inline int vector_dimension(int n_segments) { return 3 * n_segments + 4; }

/// Boundary conditions, bounds and numerical settings of one transfer.
struct TransferScenario {
  cr3bp::SystemConstants constants;
  Cr3bpState initial;        // departure state; its mass is the initial mass
  Cr3bpState target;         // arrival state; mass is replaced by m_f
  int n_segments = 20;
  int forward_segments = 10; // burns on the forward leg
  bool planar = true;

  double dt_shooting_max = 40.0;
  double dt_coast_initial_max = 15.0;
  double dt_coast_final_max = 15.0;
  double m_f_min = 350.0;
  double m_f_max = 450.0;

  double mass_scale = 1000.0;    // divides the mass defect
  // mass flow uses alpha (sqrt(|u|^2 + s^2) - s) with s = throttle_smoothing; 0 gives |T|
  double throttle_smoothing = 0.0;
  IntegratorOptions integrator{1e-10, 1e-10};

  void validate() const;
};

/// Parameters of the planar desk scenario: departure from a circular orbit
/// about the Earth, arrival on the stable manifold of an L1 Lyapunov orbit.
struct DeskScenarioSpec {
  double departure_radius = 0.5;  // DU from the Earth's center
  double departure_angle = 0.0;   // rad, rotating frame
  double initial_mass = 450.0;    // kg
  double lyapunov_amplitude = 0.02;
  double manifold_phase = 0.0;
  double manifold_epsilon = 1e-6;
  double manifold_t_backward = 6.0;  // TU
  int n_segments = 20;
  double dt_shooting_max = 15.0;
  double dt_coast_max = 5.0;
  double throttle_smoothing = 0.02;
};

TransferScenario make_scenario(const DeskScenarioSpec& spec,
                               const cr3bp::SystemConstants& constants = {});

/// Circular orbit of radius r (DU) about the larger primary, expressed in the
/// rotating frame at angle theta, prograde.
Cr3bpState circular_orbit_state(double radius, double theta, double mass,
                                const cr3bp::SystemConstants& c);

/// Throttle after the explicit norm clamp |u| <= 1.
Vec3 clamp_throttle(const Vec3& u);

/// Forward minus backward midpoint state: position, velocity and mass / mass_scale.
Vector midpoint_defect(const ShootingVector& sv, double alpha, const TransferScenario& sc);

struct DefectWithJacobian {
  Vector defect;
  Matrix jacobian;  // 7 x (3N + 4)
};

/// Defect and its exact Jacobian with respect to the flattened vector, from
/// state-transition matrices of every arc.
DefectWithJacobian midpoint_defect_jacobian(const Vector& x, double alpha,
                                            const TransferScenario& sc);

/// -m_f: maximizing the final mass as a minimization.
inline double transfer_objective(const ShootingVector& sv) { return -sv.m_f; }

struct TrajectoryLeg {
  std::vector<cr3bp::TrajectorySample> samples;  // mission time, state, burn flag
  std::vector<double> boundaries;                 // arc boundary times in mission time
};

struct TransferTrajectory {
  TrajectoryLeg forward;   // from t = 0 to the match point
  TrajectoryLeg backward;  // from t = ToF back to the match point
  double match_time = 0.0;
};

TransferTrajectory simulate_trajectory(const ShootingVector& sv, double alpha,
                                       const TransferScenario& sc);

/// The transfer as a parameterized NLP with alpha = maximum thrust in newtons.
class TransferProblem final : public ProblemInstance {
 public:
  static constexpr double kAlphaMin = 0.1;
  static constexpr double kAlphaMax = 1.0;

  TransferProblem(TransferScenario scenario, double alpha);

  std::string id() const override { return "cr3bp_transfer"; }
  const TransferScenario& scenario() const { return scenario_; }
  double max_thrust() const { return alpha()[0]; }

  Vector objective_gradient(const Vector& x) const override;
  Matrix eq_jacobian(const Vector& x) const override;
  std::pair<double, Vector> objective_and_eq(const Vector& x) const override;
  FirstOrder evaluate_first_order(const Vector& x) const override;
  double objective_scale() const override { return scenario_.mass_scale; }

 protected:
  double objective_impl(const Vector& x) const override;
  ConstraintValues constraints_impl(const Vector& x) const override;
  Vector sample_impl(Rng& rng) const override;

 private:
  TransferScenario scenario_;
};

Bounds transfer_bounds(const TransferScenario& sc);

}  // namespace ags::transfer
