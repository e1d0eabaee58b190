#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ags/dopri.hpp"

namespace ags::cr3bp {

using Vec3 = Eigen::Vector3d;
using State7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat73 = Eigen::Matrix<double, 7, 3>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Earth-Moon system and engine constants.
struct SystemConstants {
  double mu = 0.012150585;
  double du_km = 384400.0;
  double gm_total_km3_s2 = 398600.4418 + 4902.8001;  // Earth + Moon
  double isp_s = 1000.0;
  double g0 = 9.80665;
  double dry_mass_kg = 300.0;
  double wet_mass_kg = 1000.0;
  // Mass flow uses sqrt(|T|^2 + s^2) - s with s in newtons; 0 gives |T|.
  double thrust_smoothing_n = 0.0;

  /// TU = sqrt(DU^3 / G(m1 + m2)), in seconds.
  double tu_s() const;
  /// DU/TU^2 in m/s^2.
  double acceleration_unit() const;
  /// Mass flow per newton of thrust, kg/TU.
  double mass_flow_per_newton() const;

  void validate() const;
};

/// Position (DU), velocity (DU/TU) and mass (kg).
struct Cr3bpState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double mass = 1000.0;

  State7 packed() const;
  static Cr3bpState unpack(const State7& s);
};

/// -1/2 (x^2 + y^2) - (1-mu)/r1 - mu/r2 - mu(1-mu)/2. In the plane this is
/// identical to -1/2((1-mu) r1^2 + mu r2^2) - (1-mu)/r1 - mu/r2.
double effective_potential(double x, double y, double z, double mu);

/// Gradient of the effective potential.
Vec3 effective_potential_gradient(const Vec3& r, double mu);

/// Time derivative of the 7-state under thrust `thrust_n` (newtons, rotating
/// frame components). Mass rate is in kg/TU.
State7 eom(const State7& s, const Vec3& thrust_n, const SystemConstants& c);

/// Jacobi constant C = -|v|^2 - 2 U.
double jacobi_constant(const Cr3bpState& s, double mu);

/// Piecewise-constant thrust: thrust_n applies on [t_begin, t_end) (or the
/// reversed interval); coast elsewhere.
struct ThrustSegment {
  double t_begin = 0.0;
  double t_end = 0.0;
  Vec3 thrust_n = Vec3::Zero();
};

struct ControlSchedule {
  std::vector<ThrustSegment> segments;

  static ControlSchedule coast() { return {}; }
};

struct TrajectorySample {
  double t;
  State7 state;
  bool burn;
};

struct PropagationResult {
  Cr3bpState final_state;
  std::vector<TrajectorySample> trajectory;  // filled when dense output requested
};

/// Integrates from t_span.first to t_span.second (either direction).
PropagationResult propagate(const Cr3bpState& state, const ControlSchedule& schedule,
                            std::pair<double, double> t_span, const SystemConstants& c,
                            const IntegratorOptions& opts, bool dense = false);

/// One constant-thrust arc of (signed) duration dt together with its
/// state-transition matrix and the sensitivity of the end state to thrust.
struct ArcSensitivity {
  State7 end;
  Mat7 stm;
  Mat73 thrust_sensitivity;  // d end / d thrust_n
};

ArcSensitivity propagate_with_sensitivity(const State7& start, const Vec3& thrust_n, double dt,
                                          const SystemConstants& c, const IntegratorOptions& opts);

/// Constant-thrust arc without sensitivities.
State7 propagate_arc(const State7& start, const Vec3& thrust_n, double dt,
                     const SystemConstants& c, const IntegratorOptions& opts);

/// x coordinate of the collinear point between the primaries.
double l1_position(double mu);

struct PeriodicOrbit {
  Cr3bpState initial;  // on the y = 0 crossing with vx = 0
  double period = 0.0;
  Mat6 monodromy;
  double stable_eigenvalue = 0.0;
  double unstable_eigenvalue = 0.0;
  Eigen::Matrix<double, 6, 1> stable_eigenvector;
  int correction_iterations = 0;
};

/// Planar Lyapunov orbit about L1 by single-shooting differential correction
/// on vy0 with x0 held fixed. `x_amplitude` is the offset of x0 from L1
/// toward the larger primary.
PeriodicOrbit lyapunov_orbit(double mu, double x_amplitude, const SystemConstants& c,
                             const IntegratorOptions& opts = {1e-12, 1e-12});

/// State on the orbit at phase in [0, 1) and the STM from the orbit start.
std::pair<State7, Mat7> orbit_state_at_phase(const PeriodicOrbit& orbit, double phase,
                                             const SystemConstants& c,
                                             const IntegratorOptions& opts);

/// Perturbs the orbit at `phase` along the stable eigendirection by epsilon
/// (position-normalized, toward the larger primary) and integrates backward
/// for t_backward. The result lies on the stable manifold.
Cr3bpState stable_manifold_arc(const PeriodicOrbit& orbit, double phase, double epsilon,
                               double t_backward, const SystemConstants& c,
                               const IntegratorOptions& opts = {1e-12, 1e-12});

}  // namespace ags::cr3bp
