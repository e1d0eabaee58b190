#include "ags/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ags::transfer {

using cr3bp::ArcSensitivity;
using cr3bp::Mat7;
using cr3bp::Mat73;

ShootingVector decode_vector(const Vector& x, int n_segments) {
  if (n_segments < 1) throw InvalidInput("decode_vector: need at least one segment");
  if (x.size() != vector_dimension(n_segments))
    throw InvalidInput("decode_vector: expected " + std::to_string(vector_dimension(n_segments)) +
                       " entries, got " + std::to_string(x.size()));
  ShootingVector sv;
  sv.dt_shooting = x[0];
  sv.dt_coast_initial = x[1];
  sv.dt_coast_final = x[2];
  sv.m_f = x[3];
  sv.controls.resize(n_segments);
  for (int i = 0; i < n_segments; ++i) sv.controls[i] = x.segment<3>(4 + 3 * i);
  return sv;
}

Vector encode_vector(const ShootingVector& sv) {
  Vector x(vector_dimension(sv.segments()));
  x[0] = sv.dt_shooting;
  x[1] = sv.dt_coast_initial;
  x[2] = sv.dt_coast_final;
  x[3] = sv.m_f;
  for (int i = 0; i < sv.segments(); ++i) x.segment<3>(4 + 3 * i) = sv.controls[i];
  return x;
}

void TransferScenario::validate() const {
  constants.validate();
  if (n_segments < 2) throw InvalidInput("transfer: need at least two segments");
  if (forward_segments < 1 || forward_segments >= n_segments)
    throw InvalidInput("transfer: forward_segments must lie in [1, N - 1]");
  if (!(dt_shooting_max > 0.0 && dt_coast_initial_max >= 0.0 && dt_coast_final_max >= 0.0))
    throw InvalidInput("transfer: time bounds must be non-negative");
  if (!(m_f_min > 0.0 && m_f_max >= m_f_min)) throw InvalidInput("transfer: bad final-mass bounds");
  if (!(m_f_max <= initial.mass)) throw InvalidInput("transfer: m_f_max exceeds the initial mass");
  if (!(throttle_smoothing >= 0.0)) throw InvalidInput("transfer: throttle_smoothing must be >= 0");
  if (!(mass_scale > 0.0)) throw InvalidInput("transfer: mass_scale must be positive");
  if (!initial.packed().allFinite() || !target.position.allFinite() || !target.velocity.allFinite())
    throw InvalidInput("transfer: non-finite boundary state");
}

Cr3bpState circular_orbit_state(double radius, double theta, double mass,
                                const cr3bp::SystemConstants& c) {
  if (!(radius > 0.0)) throw InvalidInput("circular orbit radius must be positive");
  const double v_inertial = std::sqrt((1.0 - c.mu) / radius);
  const double v_rot = v_inertial - radius;  // subtract the frame rotation
  Cr3bpState s;
  s.position = Vec3(-c.mu + radius * std::cos(theta), radius * std::sin(theta), 0.0);
  s.velocity = Vec3(-v_rot * std::sin(theta), v_rot * std::cos(theta), 0.0);
  s.mass = mass;
  return s;
}

TransferScenario make_scenario(const DeskScenarioSpec& spec,
                               const cr3bp::SystemConstants& constants) {
  if (spec.n_segments < 2) throw InvalidInput("scenario: need at least two segments");
  if (!(spec.manifold_t_backward >= 0.0)) throw InvalidInput("scenario: negative manifold time");
  TransferScenario sc;
  sc.constants = constants;
  sc.initial = circular_orbit_state(spec.departure_radius, spec.departure_angle, spec.initial_mass,
                                    constants);
  const cr3bp::PeriodicOrbit orbit =
      cr3bp::lyapunov_orbit(constants.mu, spec.lyapunov_amplitude, constants);
  sc.target = cr3bp::stable_manifold_arc(orbit, spec.manifold_phase, spec.manifold_epsilon,
                                         spec.manifold_t_backward, constants);
  sc.n_segments = spec.n_segments;
  sc.forward_segments = spec.n_segments / 2;
  sc.dt_shooting_max = spec.dt_shooting_max;
  sc.dt_coast_initial_max = spec.dt_coast_max;
  sc.dt_coast_final_max = spec.dt_coast_max;
  sc.m_f_max = std::min(sc.m_f_max, spec.initial_mass);
  sc.throttle_smoothing = spec.throttle_smoothing;
  sc.validate();
  return sc;
}

Vec3 clamp_throttle(const Vec3& u) {
  const double n = u.norm();
  return n > 1.0 ? Vec3(u / n) : u;
}

namespace {

Eigen::Matrix3d clamp_jacobian(const Vec3& u) {
  const double n = u.norm();
  if (n <= 1.0) return Eigen::Matrix3d::Identity();
  const Vec3 e = u / n;
  return (Eigen::Matrix3d::Identity() - e * e.transpose()) / n;
}

cr3bp::SystemConstants arc_constants(const TransferScenario& sc, double alpha) {
  cr3bp::SystemConstants c = sc.constants;
  if (sc.throttle_smoothing > 0.0) c.thrust_smoothing_n = sc.throttle_smoothing * alpha;
  return c;
}

State7 scaled(const State7& s, double mass_scale) {
  State7 out = s;
  out[6] /= mass_scale;
  return out;
}

struct Legs {
  State7 forward;
  State7 backward;
};

IntegratorOptions state_only(const TransferScenario& sc) {
  IntegratorOptions o = sc.integrator;
  o.error_dims = 7;
  return o;
}

Legs propagate_legs(const ShootingVector& sv, double alpha, const TransferScenario& sc) {
  const auto c = arc_constants(sc, alpha);
  const IntegratorOptions& opts = sc.integrator;
  const int n = sv.segments();
  const double h = sv.dt_shooting / n;

  State7 f = cr3bp::propagate_arc(sc.initial.packed(), Vec3::Zero(), sv.dt_coast_initial, c, opts);
  for (int k = 0; k < sc.forward_segments; ++k)
    f = cr3bp::propagate_arc(f, alpha * clamp_throttle(sv.controls[k]), h, c, opts);

  Cr3bpState end = sc.target;
  end.mass = sv.m_f;
  State7 b = cr3bp::propagate_arc(end.packed(), Vec3::Zero(), -sv.dt_coast_final, c, opts);
  for (int k = n - 1; k >= sc.forward_segments; --k)
    b = cr3bp::propagate_arc(b, alpha * clamp_throttle(sv.controls[k]), -h, c, opts);
  return {f, b};
}

void check_segments(const ShootingVector& sv, const TransferScenario& sc) {
  if (sv.segments() != sc.n_segments)
    throw InvalidInput("shooting vector has " + std::to_string(sv.segments()) +
                       " segments, scenario expects " + std::to_string(sc.n_segments));
}

}  // namespace

Vector midpoint_defect(const ShootingVector& sv, double alpha, const TransferScenario& sc) {
  check_segments(sv, sc);
  const Legs legs = propagate_legs(sv, alpha, sc);
  return scaled(legs.forward, sc.mass_scale) - scaled(legs.backward, sc.mass_scale);
}

DefectWithJacobian midpoint_defect_jacobian(const Vector& x, double alpha,
                                            const TransferScenario& sc) {
  const ShootingVector sv = decode_vector(x, sc.n_segments);
  const auto c = arc_constants(sc, alpha);
  const IntegratorOptions opts = state_only(sc);
  const int n = sc.n_segments;
  const int nf = sc.forward_segments;
  const double h = sv.dt_shooting / n;
  const Vec3 zero = Vec3::Zero();

  Matrix jac = Matrix::Zero(7, x.size());

  // forward leg, accumulated from the match point backwards: P = Phi_nf ... Phi_{k+1}
  const State7 sc_fwd = cr3bp::propagate_arc(sc.initial.packed(), zero, sv.dt_coast_initial, c,
                                             opts);
  std::vector<ArcSensitivity> fwd(nf);
  std::vector<Vec3> thrust(n);
  for (int k = 0; k < n; ++k) thrust[k] = alpha * clamp_throttle(sv.controls[k]);
  State7 s = sc_fwd;
  for (int k = 0; k < nf; ++k) {
    fwd[k] = cr3bp::propagate_with_sensitivity(s, thrust[k], h, c, opts);
    s = fwd[k].end;
  }
  const State7 f_end = s;

  Cr3bpState tgt = sc.target;
  tgt.mass = sv.m_f;
  const State7 bc = cr3bp::propagate_arc(tgt.packed(), zero, -sv.dt_coast_final, c, opts);
  std::vector<ArcSensitivity> bwd(n - nf);  // bwd[j] is segment n-1-j
  s = bc;
  for (int j = 0; j < n - nf; ++j) {
    bwd[j] = cr3bp::propagate_with_sensitivity(s, thrust[n - 1 - j], -h, c, opts);
    s = bwd[j].end;
  }
  const State7 b_end = s;

  Mat7 p = Mat7::Identity();
  State7 d_dh = State7::Zero();
  for (int k = nf - 1; k >= 0; --k) {
    d_dh += p * cr3bp::eom(fwd[k].end, thrust[k], c);
    jac.block<7, 3>(0, 4 + 3 * k) = p * fwd[k].thrust_sensitivity * alpha *
                                    clamp_jacobian(sv.controls[k]);
    p = p * fwd[k].stm;
  }
  jac.col(1) = p * cr3bp::eom(sc_fwd, zero, c);

  Mat7 q = Mat7::Identity();
  State7 b_dh = State7::Zero();
  for (int j = n - nf - 1; j >= 0; --j) {
    const int k = n - 1 - j;
    b_dh -= q * cr3bp::eom(bwd[j].end, thrust[k], c);
    jac.block<7, 3>(0, 4 + 3 * k) = -q * bwd[j].thrust_sensitivity * alpha *
                                    clamp_jacobian(sv.controls[k]);
    q = q * bwd[j].stm;
  }
  // ballistic coast: d(bc)/d(m_f) is the mass unit vector
  jac.col(2) = q * cr3bp::eom(bc, zero, c);
  jac.col(3) = -q.col(6);
  jac.col(0) = (d_dh - b_dh) / n;

  jac.row(6) /= sc.mass_scale;
  DefectWithJacobian out;
  out.defect = scaled(f_end, sc.mass_scale) - scaled(b_end, sc.mass_scale);
  out.jacobian = std::move(jac);
  return out;
}

TransferTrajectory simulate_trajectory(const ShootingVector& sv, double alpha,
                                       const TransferScenario& sc) {
  check_segments(sv, sc);
  const int n = sv.segments();
  const double h = sv.dt_shooting / n;
  const double t_burn0 = sv.dt_coast_initial;
  const double tof = sv.time_of_flight();

  cr3bp::ControlSchedule schedule;
  for (int k = 0; k < n; ++k)
    schedule.segments.push_back(
        {t_burn0 + k * h, t_burn0 + (k + 1) * h, alpha * clamp_throttle(sv.controls[k])});

  const auto c = arc_constants(sc, alpha);
  TransferTrajectory out;
  out.match_time = t_burn0 + sc.forward_segments * h;
  out.forward.samples = cr3bp::propagate(sc.initial, schedule, {0.0, out.match_time}, c, sc.integrator, true)
                            .trajectory;
  out.forward.boundaries.push_back(0.0);
  for (int k = 0; k <= sc.forward_segments; ++k) out.forward.boundaries.push_back(t_burn0 + k * h);

  Cr3bpState end = sc.target;
  end.mass = sv.m_f;
  out.backward.samples =
      cr3bp::propagate(end, schedule, {tof, out.match_time}, c, sc.integrator, true)
          .trajectory;
  out.backward.boundaries.push_back(tof);
  for (int k = n; k >= sc.forward_segments; --k) out.backward.boundaries.push_back(t_burn0 + k * h);
  return out;
}

Bounds transfer_bounds(const TransferScenario& sc) {
  const int dim = vector_dimension(sc.n_segments);
  Bounds b{Vector::Constant(dim, -1.0), Vector::Constant(dim, 1.0)};
  b.lower.head<4>() << 0.0, 0.0, 0.0, sc.m_f_min;
  b.upper.head<4>() << sc.dt_shooting_max, sc.dt_coast_initial_max, sc.dt_coast_final_max,
      sc.m_f_max;
  if (sc.planar) {
    for (int k = 0; k < sc.n_segments; ++k) {
      b.lower[4 + 3 * k + 2] = 0.0;
      b.upper[4 + 3 * k + 2] = 0.0;
    }
  }
  return b;
}

namespace {
const TransferScenario& validated(const TransferScenario& sc) {
  sc.validate();
  return sc;
}
}  // namespace

TransferProblem::TransferProblem(TransferScenario scenario, double alpha)
    : ProblemInstance(transfer_bounds(validated(scenario)),
                      ProblemParameter::scalar(alpha, kAlphaMin, kAlphaMax), 7, 0),
      scenario_(std::move(scenario)) {}

double TransferProblem::objective_impl(const Vector& x) const { return -x[3]; }

ConstraintValues TransferProblem::constraints_impl(const Vector& x) const {
  return {midpoint_defect(decode_vector(x, scenario_.n_segments), max_thrust(), scenario_),
          Vector(0)};
}

Vector TransferProblem::objective_gradient(const Vector& x) const {
  check_input(x);
  Vector g = Vector::Zero(x.size());
  g[3] = -1.0;
  return g;
}

Matrix TransferProblem::eq_jacobian(const Vector& x) const {
  check_input(x);
  return midpoint_defect_jacobian(x, max_thrust(), scenario_).jacobian;
}

std::pair<double, Vector> TransferProblem::objective_and_eq(const Vector& x) const {
  check_input(x);
  Vector eq = constraints_impl(x).eq;
  if (!eq.allFinite()) throw InvalidInput("transfer defect is not finite");
  return {-x[3], std::move(eq)};
}

FirstOrder TransferProblem::evaluate_first_order(const Vector& x) const {
  check_input(x);
  DefectWithJacobian dj = midpoint_defect_jacobian(x, max_thrust(), scenario_);
  if (!dj.defect.allFinite() || !dj.jacobian.allFinite())
    throw InvalidInput("transfer defect is not finite");
  FirstOrder fo;
  fo.objective = -x[3];
  fo.eq = std::move(dj.defect);
  fo.eq_jacobian = std::move(dj.jacobian);
  fo.gradient = Vector::Zero(x.size());
  fo.gradient[3] = -1.0;
  return fo;
}

Vector TransferProblem::sample_impl(Rng& rng) const {
  const Bounds& b = bounds();
  Vector x(dimension());
  for (int i = 0; i < 4; ++i) x[i] = rng.uniform(b.lower[i], b.upper[i]);
  for (int k = 0; k < scenario_.n_segments; ++k) {
    Vec3 u;
    if (scenario_.planar) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double mag = rng.uniform();
      u = Vec3(mag * std::cos(angle), mag * std::sin(angle), 0.0);
    } else {
      const double cz = rng.uniform(-1.0, 1.0);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double mag = rng.uniform();
      const double sz = std::sqrt(1.0 - cz * cz);
      u = mag * Vec3(sz * std::cos(angle), sz * std::sin(angle), cz);
    }
    x.segment<3>(4 + 3 * k) = u;
  }
  return x;
}

}  // namespace ags::transfer
