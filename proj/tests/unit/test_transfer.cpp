#include <cmath>
#include <limits>

#include "ags/search.hpp"
#include "ags/transfer.hpp"
#include "doctest.h"

using namespace ags;
using namespace ags::transfer;

namespace {

constexpr double kAlpha = 0.5;

ShootingVector sample_vector(int n, Rng& rng, bool backward_thrust = true) {
  ShootingVector sv;
  sv.dt_shooting = 2.0;
  sv.dt_coast_initial = 0.3;
  sv.dt_coast_final = 0.4;
  sv.m_f = 420.0;
  for (int k = 0; k < n; ++k) {
    const double a = rng.uniform(0.0, 6.283185307179586);
    const double m = rng.uniform(0.2, 1.3);  // some entries exceed the unit ball
    sv.controls.push_back(Vec3(m * std::cos(a), m * std::sin(a), 0.0));
  }
  if (!backward_thrust)
    for (int k = n / 2; k < n; ++k) sv.controls[k].setZero();
  return sv;
}

// Target placed at the end of a full forward propagation of sv, so the
// scenario is consistent with sv and the defect vanishes.
TransferScenario consistent_scenario(ShootingVector& sv, double smoothing = 0.0) {
  TransferScenario sc;
  sc.initial = circular_orbit_state(0.5, 0.0, 450.0, sc.constants);
  sc.n_segments = sv.segments();
  sc.forward_segments = sv.segments() / 2;
  sc.dt_shooting_max = 10.0;
  sc.dt_coast_initial_max = 5.0;
  sc.dt_coast_final_max = 5.0;
  sc.throttle_smoothing = smoothing;
  sc.integrator = {1e-12, 1e-12};
  sc.target = sc.initial;  // placeholder
  cr3bp::ControlSchedule schedule;
  const double h = sv.dt_shooting / sv.segments();
  for (int k = 0; k < sv.segments(); ++k)
    schedule.segments.push_back({sv.dt_coast_initial + k * h, sv.dt_coast_initial + (k + 1) * h,
                                 kAlpha * clamp_throttle(sv.controls[k])});
  cr3bp::SystemConstants c = sc.constants;
  c.thrust_smoothing_n = smoothing * kAlpha;
  sc.target = cr3bp::propagate(sc.initial, schedule, {0.0, sv.time_of_flight()}, c, sc.integrator)
                  .final_state;
  sv.m_f = sc.target.mass;
  sc.m_f_min = 350.0;
  sc.m_f_max = 450.0;
  sc.validate();
  return sc;
}

}  // namespace

TEST_CASE("shooting vector: layout, round trip and dimensions") {
  CHECK(vector_dimension(2) == 10);
  CHECK(vector_dimension(20) == 64);
  Rng rng(1);
  const ShootingVector sv = sample_vector(20, rng);
  const Vector x = encode_vector(sv);
  CHECK(x.size() == 64);
  CHECK(x[0] == sv.dt_shooting);
  CHECK(x[1] == sv.dt_coast_initial);
  CHECK(x[2] == sv.dt_coast_final);
  CHECK(x[3] == sv.m_f);
  CHECK(x.segment<3>(4 + 3 * 7) == sv.controls[7]);
  const ShootingVector back = decode_vector(x, 20);
  CHECK(encode_vector(back) == x);
  CHECK(back.time_of_flight() == doctest::Approx(2.7));
  CHECK_THROWS_AS(decode_vector(x, 19), InvalidInput);
  CHECK_THROWS_AS(decode_vector(x, 0), InvalidInput);
}

TEST_CASE("clamp_throttle") {
  CHECK(clamp_throttle(Vec3(0.3, 0.4, 0.0)) == Vec3(0.3, 0.4, 0.0));
  CHECK((clamp_throttle(Vec3(3.0, 4.0, 0.0)) - Vec3(0.6, 0.8, 0.0)).norm() < 1e-15);
}

TEST_CASE("circular orbit state has the inertial circular speed") {
  const cr3bp::SystemConstants c;
  for (double th : {0.0, 1.0, 2.5}) {
    const Cr3bpState s = circular_orbit_state(0.5, th, 450.0, c);
    const Vec3 r = s.position - Vec3(-c.mu, 0, 0);
    CHECK(r.norm() == doctest::Approx(0.5));
    const Vec3 v_in = s.velocity + Vec3(-s.position.y(), s.position.x(), 0.0);
    const Vec3 v_primary(0.0, -c.mu, 0.0);  // velocity of the primary in the inertial frame
    CHECK((v_in - v_primary).norm() == doctest::Approx(std::sqrt((1 - c.mu) / 0.5)));
    CHECK(r.dot(v_in - v_primary) == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(circular_orbit_state(0.0, 0.0, 1.0, c), InvalidInput);
}

TEST_CASE("defect vanishes for a consistent trajectory") {
  Rng rng(2);
  for (double s : {0.0, 0.01}) {
    ShootingVector sv = sample_vector(8, rng);
    const TransferScenario sc = consistent_scenario(sv, s);
    const Vector d = midpoint_defect(sv, kAlpha, sc);
    CHECK(d.size() == 7);
    CHECK(d.lpNorm<Eigen::Infinity>() < 1e-9);
    TransferProblem p(sc, kAlpha);
    CHECK(p.evaluate_constraints(encode_vector(sv)).eq.lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("coasting only: mass defect is the mass difference, states match the ballistic flow") {
  Rng rng(3);
  ShootingVector sv = sample_vector(6, rng);
  for (auto& u : sv.controls) u.setZero();
  TransferScenario sc = consistent_scenario(sv);
  CHECK(sc.target.mass == 450.0);
  sv.m_f = 400.0;
  const Vector d = midpoint_defect(sv, kAlpha, sc);
  CHECK(d.head<6>().lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(d[6] == doctest::Approx(50.0 / sc.mass_scale).epsilon(1e-12));
}

TEST_CASE("final mass moves only the mass row without backward thrust") {
  Rng rng(4);
  ShootingVector sv = sample_vector(6, rng, false);
  const TransferScenario sc = consistent_scenario(sv);
  const DefectWithJacobian dj = midpoint_defect_jacobian(encode_vector(sv), kAlpha, sc);
  CHECK(dj.jacobian.col(3).head<6>().norm() < 1e-14);
  CHECK(dj.jacobian(6, 3) == doctest::Approx(-1.0 / sc.mass_scale));
}

TEST_CASE("defect Jacobian matches central differences") {
  Rng rng(5);
  for (double s : {0.0, 0.02}) {
    ShootingVector sv = sample_vector(6, rng);
    const TransferScenario sc = consistent_scenario(sv, s);
    sv.m_f -= 5.0;
    sv.dt_coast_final += 0.1;
    Vector x = encode_vector(sv);
    const DefectWithJacobian dj = midpoint_defect_jacobian(x, kAlpha, sc);
    CHECK((dj.defect - midpoint_defect(sv, kAlpha, sc)).norm() < 1e-10);
    auto f = [&](const Vector& y) { return midpoint_defect(decode_vector(y, 6), kAlpha, sc); };
    const Matrix fd = finite_diff_jacobian(f, x, 1e-6);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double scale = std::max(1e-6, fd.col(j).norm());
      INFO("column " << j);
      CHECK((dj.jacobian.col(j) - fd.col(j)).norm() / scale < 1e-5);
    }
  }
}

TEST_CASE("simulated legs agree with the defect and are continuous") {
  Rng rng(6);
  ShootingVector sv = sample_vector(8, rng);
  const TransferScenario sc = consistent_scenario(sv);
  sv.m_f -= 3.0;
  const TransferTrajectory tr = simulate_trajectory(sv, kAlpha, sc);
  REQUIRE(tr.forward.samples.size() > 2);
  REQUIRE(tr.backward.samples.size() > 2);
  CHECK(tr.match_time == doctest::Approx(0.3 + 4 * 0.25));
  CHECK(tr.forward.samples.front().t == 0.0);
  CHECK(tr.forward.samples.back().t == doctest::Approx(tr.match_time));
  CHECK(tr.backward.samples.front().t == doctest::Approx(sv.time_of_flight()));
  CHECK(tr.backward.samples.back().t == doctest::Approx(tr.match_time));
  State7 diff = tr.forward.samples.back().state - tr.backward.samples.back().state;
  diff[6] /= sc.mass_scale;
  CHECK((diff - midpoint_defect(sv, kAlpha, sc)).norm() < 1e-8);
  for (std::size_t i = 1; i < tr.forward.samples.size(); ++i) {
    CHECK(tr.forward.samples[i].t >= tr.forward.samples[i - 1].t);
    CHECK(tr.forward.samples[i].state[6] <= tr.forward.samples[i - 1].state[6] + 1e-12);
    CHECK((tr.forward.samples[i].state.head<3>() - tr.forward.samples[i - 1].state.head<3>())
              .norm() < 0.2);
  }
  for (const auto& s : tr.forward.samples)
    if (s.t < 0.3 - 1e-9) CHECK_FALSE(s.burn);
  CHECK(tr.forward.boundaries.size() == 6);
  CHECK(tr.backward.boundaries.size() == 6);
}

TEST_CASE("transfer problem: bounds, sampling and objective") {
  const TransferScenario sc = make_scenario(DeskScenarioSpec{});
  CHECK(sc.n_segments == 20);
  CHECK(sc.forward_segments == 10);
  CHECK(sc.m_f_max == 450.0);
  TransferProblem p(sc, 0.7);
  CHECK(p.dimension() == 64);
  CHECK(p.eq_constraint_count() == 7);
  CHECK(p.max_thrust() == 0.7);
  const Bounds& b = p.bounds();
  CHECK(b.upper[0] == 15.0);
  CHECK(b.upper[1] == 5.0);
  CHECK(b.lower[3] == 350.0);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = p.sample_uniform_init(static_cast<std::uint64_t>(i));
    CHECK(b.contains(x));
    for (int k = 0; k < 20; ++k) {
      CHECK(x.segment<3>(4 + 3 * k).norm() <= 1.0);
      CHECK(x[4 + 3 * k + 2] == 0.0);
    }
  }
  Vector x = p.sample_uniform_init(7);
  x[3] = 415.0;
  CHECK(p.evaluate_objective(x) == -415.0);
  CHECK(p.objective_gradient(x)[3] == -1.0);
  CHECK(p.objective_gradient(x).cwiseAbs().sum() == 1.0);
  CHECK_THROWS_AS(TransferProblem(sc, 1.5), InvalidInput);
  CHECK_THROWS_AS(p.evaluate_objective(Vector::Zero(10)), InvalidInput);

  const FirstOrder fo = p.evaluate_first_order(x);
  CHECK((fo.eq - p.evaluate_constraints(x).eq).norm() < 1e-12);
  CHECK(fo.objective == -415.0);
}

TEST_CASE("scenario validation") {
  TransferScenario sc = make_scenario(DeskScenarioSpec{});
  sc.forward_segments = 0;
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  sc = make_scenario(DeskScenarioSpec{});
  sc.m_f_max = 500.0;
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
  sc = make_scenario(DeskScenarioSpec{});
  sc.throttle_smoothing = -1.0;
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
}

TEST_CASE("augmented Lagrangian: toy two-segment transfer converges") {
  Rng rng(21);
  ShootingVector sv = sample_vector(2, rng);
  const TransferScenario sc = consistent_scenario(sv);
  TransferProblem p(sc, kAlpha);
  Vector x0 = encode_vector(sv);
  x0[0] *= 1.03;
  x0[1] *= 0.97;
  x0[3] -= 2.0;
  for (int i = 4; i < x0.size(); ++i) x0[i] += rng.uniform(-0.05, 0.05);
  x0 = p.clamp_to_bounds(x0);
  LocalSolverSettings s;
  s.auglag.clock = ClockMode::kWork;
  const SolveResult r = solve_local(p, x0, s, std::numeric_limits<double>::infinity());
  CHECK(r.converged);
  CHECK(p.evaluate_constraints(r.x_star).eq.lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(p.bounds().contains(r.x_star));
}

TEST_CASE("tiny cutoff on the desk transfer returns a partial result") {
  TransferProblem p(make_scenario(DeskScenarioSpec{}), 0.5);
  LocalSolverSettings s;
  for (ClockMode mode : {ClockMode::kWork, ClockMode::kWall}) {
    s.auglag.clock = mode;
    SolveResult r;
    CHECK_NOTHROW(r = solve_local(p, p.sample_uniform_init(3), s, 0.01));
    CHECK_FALSE(r.converged);
    CHECK(r.status == "cutoff");
    CHECK(r.x_star.size() == 64);
    CHECK(p.bounds().contains(r.x_star));
  }
}
