#include "ags/cr3bp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "ags/problem.hpp"
#include "ags/work_clock.hpp"

namespace ags::cr3bp {

namespace {

using Var77 = Eigen::Matrix<double, 77, 1>;

struct Gravity {
  Vec3 accel;          // gradient of Omega = -U
  Eigen::Matrix3d hessian;  // Hessian of Omega
};

Gravity pseudo_gravity(const Vec3& r, double mu, bool with_hessian) {
  const Vec3 rho1(r.x() + mu, r.y(), r.z());
  const Vec3 rho2(r.x() - 1.0 + mu, r.y(), r.z());
  const double r1sq = rho1.squaredNorm();
  const double r2sq = rho2.squaredNorm();
  if (r1sq == 0.0 || r2sq == 0.0) throw PropagationError("state coincides with a primary");
  const double r1 = std::sqrt(r1sq);
  const double r2 = std::sqrt(r2sq);
  const double k1 = (1.0 - mu) / (r1sq * r1);
  const double k2 = mu / (r2sq * r2);
  Gravity g;
  g.accel = Vec3(r.x(), r.y(), 0.0) - k1 * rho1 - k2 * rho2;
  if (with_hessian) {
    g.hessian = -(k1 + k2) * Eigen::Matrix3d::Identity();
    g.hessian += (3.0 * k1 / r1sq) * rho1 * rho1.transpose();
    g.hessian += (3.0 * k2 / r2sq) * rho2 * rho2.transpose();
    g.hessian(0, 0) += 1.0;
    g.hessian(1, 1) += 1.0;
  }
  return g;
}

struct ThrustTerms {
  double accel_scale;  // 1 / acceleration_unit
  double flow;         // kg/TU per newton
  double smoothing;    // newtons

  double effective_norm(double tn) const {
    return smoothing > 0.0 ? std::sqrt(tn * tn + smoothing * smoothing) - smoothing : tn;
  }
};

ThrustTerms thrust_terms(const SystemConstants& c) {
  return {1.0 / c.acceleration_unit(), c.mass_flow_per_newton(), c.thrust_smoothing_n};
}

void base_rhs(const State7& s, const Vec3& thrust, double mu, const ThrustTerms& tt,
              State7& ds) {
  const Gravity g = pseudo_gravity(s.head<3>(), mu, false);
  const double m = s[6];
  const Vec3 a = thrust * (tt.accel_scale / m);
  ds[0] = s[3];
  ds[1] = s[4];
  ds[2] = s[5];
  ds[3] = 2.0 * s[4] + g.accel.x() + a.x();
  ds[4] = -2.0 * s[3] + g.accel.y() + a.y();
  ds[5] = g.accel.z() + a.z();
  ds[6] = -tt.effective_norm(thrust.norm()) * tt.flow;
  work::add(1.0);
}

void variational_rhs(const Var77& y, const Vec3& thrust, double mu, const ThrustTerms& tt,
                     Var77& dy) {
  const State7 s = y.head<7>();
  const Gravity g = pseudo_gravity(s.head<3>(), mu, true);
  const double m = s[6];
  const Vec3 a = thrust * (tt.accel_scale / m);
  dy[0] = s[3];
  dy[1] = s[4];
  dy[2] = s[5];
  dy[3] = 2.0 * s[4] + g.accel.x() + a.x();
  dy[4] = -2.0 * s[3] + g.accel.y() + a.y();
  dy[5] = g.accel.z() + a.z();
  const double tn = thrust.norm();
  dy[6] = -tt.effective_norm(tn) * tt.flow;

  Mat7 A = Mat7::Zero();
  A.block<3, 3>(0, 3).setIdentity();
  A.block<3, 3>(3, 0) = g.hessian;
  A(3, 4) = 2.0;
  A(4, 3) = -2.0;
  A.block<3, 1>(3, 6) = -a / m;

  Eigen::Map<const Mat7> phi(y.data() + 7);
  Eigen::Map<const Mat73> b(y.data() + 56);
  Eigen::Map<Mat7> dphi(dy.data() + 7);
  Eigen::Map<Mat73> db(dy.data() + 56);
  dphi.noalias() = A * phi;
  db.noalias() = A * b;
  db.block<3, 3>(3, 0).diagonal().array() += tt.accel_scale / m;
  const double denom = std::sqrt(tn * tn + tt.smoothing * tt.smoothing);
  if (denom > 0.0) db.row(6) -= (tt.flow / denom) * thrust.transpose();
  work::add(12.0);
}

}  // namespace

double SystemConstants::tu_s() const {
  return std::sqrt(du_km * du_km * du_km / gm_total_km3_s2);
}

double SystemConstants::acceleration_unit() const {
  const double tu = tu_s();
  return du_km * 1000.0 / (tu * tu);
}

double SystemConstants::mass_flow_per_newton() const { return tu_s() / (isp_s * g0); }

void SystemConstants::validate() const {
  if (!(mu > 0.0 && mu < 0.5)) throw InvalidInput("mass parameter must lie in (0, 1/2)");
  if (!(du_km > 0.0 && gm_total_km3_s2 > 0.0 && isp_s > 0.0 && g0 > 0.0))
    throw InvalidInput("system constants must be positive");
  if (!(thrust_smoothing_n >= 0.0)) throw InvalidInput("thrust smoothing must be non-negative");
  if (!(dry_mass_kg > 0.0 && wet_mass_kg > dry_mass_kg))
    throw InvalidInput("wet mass must exceed dry mass");
}

State7 Cr3bpState::packed() const {
  State7 s;
  s << position, velocity, mass;
  return s;
}

Cr3bpState Cr3bpState::unpack(const State7& s) {
  return {s.head<3>(), s.segment<3>(3), s[6]};
}

double effective_potential(double x, double y, double z, double mu) {
  const double r1 = std::sqrt((x + mu) * (x + mu) + y * y + z * z);
  const double r2 = std::sqrt((x - 1.0 + mu) * (x - 1.0 + mu) + y * y + z * z);
  if (r1 == 0.0 || r2 == 0.0) throw InvalidInput("effective potential is singular at a primary");
  return -0.5 * (x * x + y * y) - (1.0 - mu) / r1 - mu / r2 - 0.5 * mu * (1.0 - mu);
}

Vec3 effective_potential_gradient(const Vec3& r, double mu) {
  return -pseudo_gravity(r, mu, false).accel;
}

State7 eom(const State7& s, const Vec3& thrust_n, const SystemConstants& c) {
  if (!s.allFinite()) throw InvalidInput("eom: non-finite state");
  State7 ds;
  base_rhs(s, thrust_n, c.mu, thrust_terms(c), ds);
  return ds;
}

double jacobi_constant(const Cr3bpState& s, double mu) {
  return -s.velocity.squaredNorm() -
         2.0 * effective_potential(s.position.x(), s.position.y(), s.position.z(), mu);
}

State7 propagate_arc(const State7& start, const Vec3& thrust_n, double dt,
                     const SystemConstants& c, const IntegratorOptions& opts) {
  const ThrustTerms tt = thrust_terms(c);
  DormandPrince<7> integrator(opts);
  return integrator.integrate(
      [&](double, const State7& s, State7& ds) { base_rhs(s, thrust_n, c.mu, tt, ds); }, start,
      0.0, dt);
}

ArcSensitivity propagate_with_sensitivity(const State7& start, const Vec3& thrust_n, double dt,
                                          const SystemConstants& c,
                                          const IntegratorOptions& opts) {
  const ThrustTerms tt = thrust_terms(c);
  Var77 y = Var77::Zero();
  y.head<7>() = start;
  Eigen::Map<Mat7>(y.data() + 7).setIdentity();
  IntegratorOptions o = opts;
  DormandPrince<77> integrator(o);
  const Var77 end = integrator.integrate(
      [&](double, const Var77& v, Var77& dv) { variational_rhs(v, thrust_n, c.mu, tt, dv); }, y,
      0.0, dt);
  ArcSensitivity out;
  out.end = end.head<7>();
  out.stm = Eigen::Map<const Mat7>(end.data() + 7);
  out.thrust_sensitivity = Eigen::Map<const Mat73>(end.data() + 56);
  return out;
}

PropagationResult propagate(const Cr3bpState& state, const ControlSchedule& schedule,
                            std::pair<double, double> t_span, const SystemConstants& c,
                            const IntegratorOptions& opts, bool dense) {
  const auto [t0, t1] = t_span;
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw InvalidInput("propagate: non-finite span");
  const double lo = std::min(t0, t1);
  const double hi = std::max(t0, t1);

  std::vector<double> cuts{t0, t1};
  for (const ThrustSegment& seg : schedule.segments) {
    for (double t : {seg.t_begin, seg.t_end})
      if (t > lo && t < hi) cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  if (t1 < t0) std::reverse(cuts.begin(), cuts.end());

  const ThrustTerms tt = thrust_terms(c);
  PropagationResult result;
  State7 s = state.packed();
  if (dense) result.trajectory.push_back({t0, s, false});
  DormandPrince<7> integrator(opts);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    const double mid = 0.5 * (a + b);
    Vec3 thrust = Vec3::Zero();
    for (const ThrustSegment& seg : schedule.segments) {
      if (mid >= std::min(seg.t_begin, seg.t_end) && mid < std::max(seg.t_begin, seg.t_end)) {
        thrust = seg.thrust_n;
        break;
      }
    }
    const bool burn = thrust.squaredNorm() > 0.0;
    if (dense && !result.trajectory.empty()) result.trajectory.back().burn = burn;
    auto rhs = [&](double, const State7& v, State7& dv) { base_rhs(v, thrust, c.mu, tt, dv); };
    if (dense) {
      s = integrator.integrate(rhs, s, a, b, [&](double t, const State7& v) {
        result.trajectory.push_back({t, v, burn});
        return true;
      });
    } else {
      s = integrator.integrate(rhs, s, a, b);
    }
  }
  result.final_state = Cr3bpState::unpack(s);
  return result;
}

double l1_position(double mu) {
  double x = 1.0 - mu - std::cbrt(mu / 3.0);
  for (int i = 0; i < 50; ++i) {
    const Gravity g = pseudo_gravity(Vec3(x, 0.0, 0.0), mu, true);
    const double step = g.accel.x() / g.hessian(0, 0);
    x -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return x;
}

namespace {


struct Crossing {
  State7 state;
  Mat7 stm;
  double t;
};

// Integrates state + STM from the start until y changes sign, then refines the
// crossing time with Newton steps on y(t) = 0.
Crossing first_y_crossing(const State7& start, const SystemConstants& c,
                          const IntegratorOptions& opts) {
  const ThrustTerms tt = thrust_terms(c);
  const Vec3 zero = Vec3::Zero();
  auto rhs = [&](double, const Var77& v, Var77& dv) { variational_rhs(v, zero, c.mu, tt, dv); };
  Var77 y0 = Var77::Zero();
  y0.head<7>() = start;
  Eigen::Map<Mat7>(y0.data() + 7).setIdentity();

  IntegratorOptions o = opts;
  o.error_dims = 7;
  DormandPrince<77> integrator(o);
  Var77 prev = y0;
  double t_prev = 0.0;
  bool crossed = false;
  double t_stop = 0.0;
  const double sign0 = start[4] >= 0.0 ? 1.0 : -1.0;
  integrator.integrate(rhs, y0, 0.0, 50.0,
                       [&](double t, const Var77& v) {
                         if (t > 1e-6 && v[1] * sign0 < 0.0) {
                           crossed = true;
                           return false;
                         }
                         prev = v;
                         t_prev = t;
                         return true;
                       },
                       &t_stop);
  if (!crossed) throw std::runtime_error("lyapunov_orbit: no y = 0 crossing within 50 TU");

  Var77 cur = prev;
  double t = t_prev;
  for (int it = 0; it < 20; ++it) {
    Var77 d;
    rhs(t, cur, d);
    const double dt = -cur[1] / d[1];
    if (std::abs(cur[1]) < 1e-14 || std::abs(dt) < 1e-15) break;
    DormandPrince<77> step(o);
    cur = step.integrate(rhs, cur, t, t + dt);
    t += dt;
  }
  return {cur.head<7>(), Eigen::Map<const Mat7>(cur.data() + 7), t};
}

}  // namespace

PeriodicOrbit lyapunov_orbit(double mu, double x_amplitude, const SystemConstants& c,
                             const IntegratorOptions& opts) {
  SystemConstants cc = c;
  cc.mu = mu;
  const double xl = l1_position(mu);
  const double c2 = (1.0 - mu) / std::pow(std::abs(xl + mu), 3) +
                    mu / std::pow(std::abs(xl - 1.0 + mu), 3);
  const double nu2 = 0.5 * (c2 - 2.0 + std::sqrt(9.0 * c2 * c2 - 8.0 * c2));
  State7 s0 = State7::Zero();
  s0[0] = xl - x_amplitude;
  s0[4] = 0.5 * (nu2 + 1.0 + 2.0 * c2) * x_amplitude;
  s0[6] = 1000.0;

  PeriodicOrbit orbit;
  Crossing half;
  int iter = 0;
  for (; iter < 50; ++iter) {
    half = first_y_crossing(s0, cc, opts);
    const double vx = half.state[3];
    if (std::abs(vx) < 1e-10) break;
    State7 d = eom(half.state, Vec3::Zero(), cc);
    const double denom = half.stm(3, 4) - d[3] * half.stm(1, 4) / d[1];
    s0[4] -= vx / denom;
  }
  if (iter == 50) throw std::runtime_error("lyapunov_orbit: differential correction diverged");

  orbit.initial = Cr3bpState::unpack(s0);
  orbit.period = 2.0 * half.t;
  orbit.correction_iterations = iter;
  const ArcSensitivity full = propagate_with_sensitivity(s0, Vec3::Zero(), orbit.period, cc, opts);
  orbit.monodromy = full.stm.topLeftCorner<6, 6>();

  Eigen::EigenSolver<Mat6> es(orbit.monodromy);
  int i_min = 0, i_max = 0;
  for (int i = 0; i < 6; ++i) {
    const auto ev = es.eigenvalues()[i];
    if (std::abs(ev) < std::abs(es.eigenvalues()[i_min])) i_min = i;
    if (std::abs(ev) > std::abs(es.eigenvalues()[i_max])) i_max = i;
  }
  const auto lam_s = es.eigenvalues()[i_min];
  if (std::abs(lam_s.imag()) > 1e-8 || std::abs(lam_s) >= 1.0 - 1e-6)
    throw std::runtime_error("lyapunov_orbit: no real stable eigenvalue");
  orbit.stable_eigenvalue = lam_s.real();
  orbit.unstable_eigenvalue = es.eigenvalues()[i_max].real();
  orbit.stable_eigenvector = es.eigenvectors().col(i_min).real().normalized();
  return orbit;
}

std::pair<State7, Mat7> orbit_state_at_phase(const PeriodicOrbit& orbit, double phase,
                                             const SystemConstants& c,
                                             const IntegratorOptions& opts) {
  const double t = phase * orbit.period;
  const ArcSensitivity arc =
      propagate_with_sensitivity(orbit.initial.packed(), Vec3::Zero(), t, c, opts);
  return {arc.end, arc.stm};
}

Cr3bpState stable_manifold_arc(const PeriodicOrbit& orbit, double phase, double epsilon,
                               double t_backward, const SystemConstants& c,
                               const IntegratorOptions& opts) {
  if (!(phase >= 0.0 && phase < 1.0)) throw InvalidInput("manifold phase must lie in [0, 1)");
  const auto [on_orbit, stm] = orbit_state_at_phase(orbit, phase, c, opts);
  Eigen::Matrix<double, 6, 1> dir = stm.topLeftCorner<6, 6>() * orbit.stable_eigenvector;
  const double pos_norm = dir.head<3>().norm();
  if (pos_norm == 0.0) throw std::runtime_error("stable eigenvector has no position part");
  dir /= pos_norm;
  if (dir[0] > 0.0) dir = -dir;  // interior branch, toward the larger primary
  State7 s = on_orbit;
  s.head<6>() += epsilon * dir;
  return Cr3bpState::unpack(propagate_arc(s, Vec3::Zero(), -t_backward, c, opts));
}

}  // namespace ags::cr3bp
