#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "ags/cr3bp.hpp"
#include "ags/problem.hpp"
#include "ags/rng.hpp"

using namespace ags;
using namespace ags::cr3bp;

namespace {

const IntegratorOptions kTight{1e-12, 1e-12};

// -1/2((1-mu) r1^2 + mu r2^2) - (1-mu)/r1 - mu/r2, evaluated directly.
double oracle_potential(double x, double y, double z, double mu) {
  const double r1 = std::sqrt((x + mu) * (x + mu) + y * y + z * z);
  const double r2 = std::sqrt((x - 1 + mu) * (x - 1 + mu) + y * y + z * z);
  return -0.5 * ((1 - mu) * r1 * r1 + mu * r2 * r2) - (1 - mu) / r1 - mu / r2;
}

Cr3bpState sample_state(Rng& rng) {
  Cr3bpState s;
  s.position = Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), 0.0);
  if (s.position.norm() < 0.2) s.position = Vec3(0.4, 0.3, 0.0);
  s.velocity = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0);
  s.mass = 800.0;
  return s;
}

}  // namespace

TEST_CASE("system constants") {
  const SystemConstants c;
  CHECK(c.tu_s() == doctest::Approx(375190).epsilon(1e-4));
  CHECK_NOTHROW(c.validate());
  SystemConstants bad = c;
  bad.mu = 0.7;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("effective potential matches the planar oracle") {
  CHECK(effective_potential(0, 0, 0, 0.5) == doctest::Approx(-2.125));
  CHECK(jacobi_constant({Vec3::Zero(), Vec3::Zero(), 1000}, 0.5) == doctest::Approx(4.25));
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-1.5, 1.5), y = rng.uniform(-1.5, 1.5);
    CHECK(effective_potential(x, y, 0, 0.0121) ==
          doctest::Approx(oracle_potential(x, y, 0, 0.0121)).epsilon(1e-12));
    const double z = rng.uniform(-0.5, 0.5);
    CHECK(effective_potential(x, y, z, 0.0121) == effective_potential(x, y, -z, 0.0121));
  }
  CHECK(effective_potential_gradient(Vec3::Zero(), 0.5).norm() < 1e-15);
  CHECK_THROWS_AS(effective_potential(-0.5, 0, 0, 0.5), InvalidInput);
}

TEST_CASE("potential gradient matches finite differences") {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vec3 r(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-0.3, 0.3));
    const Vector fd = finite_diff_gradient(
        [](const Vector& v) { return effective_potential(v[0], v[1], v[2], 0.0121); },
        Vector(r), 1e-6);
    CHECK((effective_potential_gradient(r, 0.0121) - fd).norm() < 1e-6);
  }
}

TEST_CASE("jacobi constant decreases with speed at fixed position") {
  Cr3bpState s{Vec3(0.5, 0.2, 0), Vec3(0.1, 0, 0), 900};
  const double c1 = jacobi_constant(s, 0.0121);
  s.velocity *= 2;
  CHECK(jacobi_constant(s, 0.0121) < c1);
}

TEST_CASE("thrust acceleration and mass flow") {
  const SystemConstants c;
  State7 s;
  s << 0.5, 0.1, 0, 0, 0, 0, 1000;
  const State7 ballistic = eom(s, Vec3::Zero(), c);
  const State7 thrusted = eom(s, Vec3(1, 0, 0), c);
  CHECK(ballistic[6] == 0.0);
  // 1 N on 1000 kg is 1e-3 m/s^2
  CHECK((thrusted[3] - ballistic[3]) * c.acceleration_unit() == doctest::Approx(1e-3));
  CHECK(-thrusted[6] / c.tu_s() == doctest::Approx(1.0 / 9806.65));
}

TEST_CASE("jacobi drift on coast arcs and reversibility") {
  const SystemConstants c;
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    const Cr3bpState s = sample_state(rng);
    PropagationResult fwd;
    try {
      fwd = propagate(s, ControlSchedule::coast(), {0, 10}, c, kTight, true);
    } catch (const PropagationError&) {
      continue;
    }
    // arcs through the body of the Earth (radius ~0.0166 DU) are not physical
    double closest = 1e9;
    for (const auto& p : fwd.trajectory)
      closest = std::min(closest, (p.state.head<3>() - Vec3(-c.mu, 0, 0)).norm());
    if (closest < 0.02) continue;
    CHECK(std::abs(jacobi_constant(fwd.final_state, c.mu) - jacobi_constant(s, c.mu)) < 1e-9);
    const Cr3bpState s1 = propagate(s, ControlSchedule::coast(), {0, 2}, c, kTight).final_state;
    const Cr3bpState back = propagate(s1, ControlSchedule::coast(), {2, 0}, c, kTight).final_state;
    CHECK((back.position - s.position).norm() < 1e-9);
  }
}

TEST_CASE("dynamics are autonomous and planar motion stays planar") {
  const SystemConstants c;
  Cr3bpState s{Vec3(0.6, 0.1, 0), Vec3(0.0, 0.4, 0), 950};
  ControlSchedule sched;
  sched.segments.push_back({0.0, 1.0, Vec3(0.3, 0.2, 0)});
  ControlSchedule shifted;
  shifted.segments.push_back({5.0, 6.0, Vec3(0.3, 0.2, 0)});
  const auto a = propagate(s, sched, {0, 2}, c, kTight).final_state;
  const auto b = propagate(s, shifted, {5, 7}, c, kTight).final_state;
  CHECK((a.packed() - b.packed()).norm() < 1e-10);
  CHECK(a.position.z() == 0.0);
  CHECK(a.velocity.z() == 0.0);
  CHECK(a.mass < 950.0);
}

TEST_CASE("dense output marks burn segments and boundaries") {
  const SystemConstants c;
  Cr3bpState s{Vec3(0.6, 0.1, 0), Vec3(0.0, 0.4, 0), 950};
  ControlSchedule sched;
  sched.segments.push_back({0.5, 1.0, Vec3(0.3, 0.0, 0)});
  const auto r = propagate(s, sched, {0, 2}, c, kTight, true);
  REQUIRE(r.trajectory.size() > 3);
  CHECK(r.trajectory.front().t == 0.0);
  bool hit_begin = false, hit_end = false;
  for (const auto& p : r.trajectory) {
    if (p.t == 0.5) hit_begin = true;
    if (p.t == 1.0) hit_end = true;
    if (p.t > 0.5 && p.t < 1.0) CHECK(p.state[6] < 950.0);
  }
  CHECK(hit_begin);
  CHECK(hit_end);
}

TEST_CASE("variational STM and thrust sensitivity match finite differences") {
  const SystemConstants c;
  Rng rng(9);
  for (int trial = 0; trial < 4; ++trial) {
    const Cr3bpState s0 = sample_state(rng);
    const Vec3 thrust = trial % 2 == 0 ? Vec3::Zero() : Vec3(0.2, -0.1, 0.0);
    const double dt = 0.8;
    ArcSensitivity arc;
    try {
      arc = propagate_with_sensitivity(s0.packed(), thrust, dt, c, kTight);
    } catch (const PropagationError&) {
      continue;
    }
    const Matrix fd = finite_diff_jacobian(
        [&](const Vector& v) -> Vector {
          return propagate_arc(State7(v), thrust, dt, c, kTight);
        },
        Vector(s0.packed()), 1e-5);
    const double scale = fd.norm();
    CHECK((arc.stm - fd).norm() / scale < 1e-6);
    const Matrix fdt = finite_diff_jacobian(
        [&](const Vector& v) -> Vector {
          return propagate_arc(s0.packed(), Vec3(v), dt, c, kTight);
        },
        Vector(thrust + Vec3(0, 0, 0)), 1e-4);
    if (trial % 2 == 1) CHECK((arc.thrust_sensitivity - fdt).norm() / fdt.norm() < 1e-6);
  }
}

TEST_CASE("L1 Lyapunov orbit") {
  const SystemConstants c;
  const double xl = l1_position(c.mu);
  CHECK(xl == doctest::Approx(0.836915).epsilon(1e-5));
  const PeriodicOrbit orbit = lyapunov_orbit(c.mu, 0.01, c);
  CHECK(orbit.period > 2.5);
  CHECK(orbit.period < 3.0);
  const auto end =
      propagate(orbit.initial, ControlSchedule::coast(), {0, orbit.period}, c, kTight).final_state;
  CHECK((end.position - orbit.initial.position).norm() < 1e-9);
  CHECK(std::abs(orbit.monodromy.determinant() - 1.0) < 1e-8);
  CHECK(orbit.stable_eigenvalue * orbit.unstable_eigenvalue == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(orbit.stable_eigenvalue < 1.0);

  // symmetry about the x-axis: the state at t and at T - t mirror each other
  const auto a = propagate(orbit.initial, ControlSchedule::coast(), {0, 0.7}, c, kTight).final_state;
  const auto b = propagate(orbit.initial, ControlSchedule::coast(), {0, orbit.period - 0.7}, c,
                           kTight).final_state;
  CHECK(std::abs(a.position.x() - b.position.x()) < 1e-9);
  CHECK(std::abs(a.position.y() + b.position.y()) < 1e-9);
}

TEST_CASE("stable manifold arc") {
  const SystemConstants c;
  const PeriodicOrbit orbit = lyapunov_orbit(c.mu, 0.01, c);
  const double tb = 2.0;
  const double eps = 1e-6;

  const Cr3bpState on = stable_manifold_arc(orbit, 0.0, 0.0, orbit.period, c);
  CHECK((on.position - orbit.initial.position).norm() < 1e-8);

  const Cr3bpState target = stable_manifold_arc(orbit, 0.3, eps, tb, c);
  const auto back =
      propagate(target, ControlSchedule::coast(), {0, tb}, c, kTight).final_state;
  const State7 on_orbit = orbit_state_at_phase(orbit, 0.3, c, kTight).first;
  CHECK((back.position - on_orbit.head<3>()).norm() < 10 * eps);

  const Cr3bpState near = stable_manifold_arc(orbit, 0.31, eps, tb, c);
  CHECK((near.position - target.position).norm() < 0.1);
  CHECK_THROWS_AS(stable_manifold_arc(orbit, 1.0, eps, tb, c), InvalidInput);
}
