#include "doctest.h"

#include "rallyforge/errors.hpp"
#include "rallyforge/trajectory_fit.hpp"

#include <chrono>
#include <random>

using namespace rallyforge;

namespace {

struct Shot {
  ContactPoint a, b;
};

// Forward-simulates a random valid groundstroke and returns its two contacts.
std::optional<Shot> random_shot(std::mt19937_64& rng, const FlightParams& params, const CourtSpec& court) {
  std::uniform_real_distribution<double> ux(-3.5, 3.5), uh(15, 40), uz(-1, 9), us(0, 20), ub(11.0, 13.0),
      uheight(0.6, 1.4);
  LaunchState l;
  l.origin = Vec3(ux(rng), ub(rng), uheight(rng));
  const Vec2 target(ux(rng), -ub(rng));
  l.heading = (target - l.origin.head<2>()).normalized();
  l.v_h = uh(rng);
  l.v_z = uz(rng);
  l.v_spin = us(rng);
  l.spin_kind = rng() % 3 == 0 ? SpinKind::Underspin : SpinKind::Topspin;
  StopCondition stop;
  stop.plane_y = target.y();
  BallTrajectory traj;
  try {
    traj = simulate_trajectory(l, params, court, stop);
  } catch (const NeverLands&) {
    return std::nullopt;
  }
  if (traj.end_reason != FlightEnd::ReachedPlane || traj.bounces.size() != 1) return std::nullopt;
  if (!traj.net_clearance || *traj.net_clearance <= 0.05) return std::nullopt;
  if (!in_singles_half(Vec2(traj.bounces[0].p.head<2>()), Side::Far, court)) return std::nullopt;
  if (traj.end_pos.z() < 0.3 || traj.end_pos.z() > 2.5) return std::nullopt;
  return Shot{{l.origin, 0.4}, {traj.end_pos, 0.4 + traj.end_time}};
}

}  // namespace

TEST_CASE("round trip: fitting a forward-simulated shot recovers its end contact") {
  FlightParams params;
  CourtSpec court;
  GridSpec grid;
  std::mt19937_64 rng(1234);
  int trials = 0, good = 0;
  while (trials < 10) {
    const auto shot = random_shot(rng, params, court);
    if (!shot) continue;
    ++trials;
    const FitResult fit = fit_trajectory(shot->a, shot->b, params, court, grid, false);
    const double dpos = (fit.trajectory.end_pos - shot->b.pos).norm();
    const double dt = std::abs(shot->a.t + fit.trajectory.end_time - shot->b.t);
    if (dpos < 0.2 && dt < 0.03) ++good;
    CHECK(fit.residual <= fit.grid_residual + 1e-9);
    CHECK(fit.trajectory.bounces.size() == 1);
  }
  CHECK(good >= 9);
}

TEST_CASE("physically impossible contacts are rejected") {
  FlightParams params;
  CourtSpec court;
  GridSpec grid;
  const ContactPoint a{Vec3(0, 11.885, 1.0), 0.0};
  const ContactPoint b{Vec3(0, -11.885, 1.0), 0.01};
  CHECK_THROWS_AS(fit_trajectory(a, b, params, court, grid, false), NoFeasibleTrajectory);
  CHECK_THROWS_AS(fit_trajectory(a, ContactPoint{Vec3(0, 5.0, 1.0), 1.0}, params, court, grid, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_trajectory(a, ContactPoint{Vec3(0, -11.0, 1.0), -1.0}, params, court, grid, false),
                  std::invalid_argument);
}

TEST_CASE("drag-free volley fit matches the closed-form projectile") {
  FlightParams params;
  params.drag_coefficient = 0.0;
  CourtSpec court;
  GridSpec grid;
  grid.spins = {0.0};
  grid.both_spin_kinds = false;
  const ContactPoint a{Vec3(0.0, 11.0, 1.0), 0.0};
  const ContactPoint b{Vec3(0.0, -11.0, 1.0), 1.1};
  // Same height at both ends: v_z = g*T/2, v_h = distance/T.
  const double vz_exact = 0.5 * params.gravity * 1.1;
  const double vh_exact = 22.0 / 1.1;
  for (bool polish : {false, true}) {
    grid.polish = polish;
    const FitResult fit = fit_trajectory(a, b, params, court, grid, true);
    CHECK(std::abs(fit.grid_launch.v_z - vz_exact) <= 1.0);
    CHECK(std::abs(fit.grid_launch.v_h - vh_exact) <= 1.0);
    CHECK(fit.trajectory.bounces.empty());
    // A volley still records where the ball would have landed.
    REQUIRE(fit.trajectory.projected_bounce.has_value());
    CHECK(fit.trajectory.projected_bounce->t > 1.1);
    if (polish) {
      CHECK(fit.trajectory.launch.v_z == doctest::Approx(vz_exact).epsilon(1e-3));
      CHECK(fit.residual < 0.01);
    }
  }
}

TEST_CASE("fit is deterministic and grid refinement never increases the grid residual") {
  FlightParams params;
  CourtSpec court;
  std::mt19937_64 rng(99);
  int checked = 0;
  while (checked < 3) {
    const auto shot = random_shot(rng, params, court);
    if (!shot) continue;
    ++checked;
    GridSpec coarse;
    coarse.polish = false;
    coarse.tolerance = 100.0;
    coarse.v_h_steps = 12;  // 5 m/s spacing
    coarse.v_z_steps = 6;   // 5 m/s spacing
    GridSpec fine = coarse;
    fine.v_h_steps = 23;  // contains every coarse node
    fine.v_z_steps = 11;
    const FitResult c1 = fit_trajectory(shot->a, shot->b, params, court, coarse, false);
    const FitResult c2 = fit_trajectory(shot->a, shot->b, params, court, coarse, false);
    const FitResult f = fit_trajectory(shot->a, shot->b, params, court, fine, false);
    CHECK(c1.grid_residual == c2.grid_residual);
    CHECK(c1.grid_index == c2.grid_index);
    CHECK(f.grid_residual <= c1.grid_residual);
  }
}

TEST_CASE("a default-grid fit runs within its time budget") {
  FlightParams params;
  CourtSpec court;
  GridSpec grid;
  std::mt19937_64 rng(5);
  auto shot = random_shot(rng, params, court);
  while (!shot) shot = random_shot(rng, params, court);
  const auto t0 = std::chrono::steady_clock::now();
  const FitResult fit = fit_trajectory(shot->a, shot->b, params, court, grid, false);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("fit ms: " << ms << " residual " << fit.residual);
  CHECK(ms < 200.0);
}

TEST_CASE("placement fit lands at the placement with the requested ground speed") {
  FlightParams params;
  CourtSpec court;
  struct Case {
    Vec3 contact;
    Vec2 placement;
    double speed;
    ShotType shot;
  };
  const std::vector<Case> cases = {
      {Vec3(-1.0, 12.0, 1.0), Vec2(3.0, -9.0), 22.0, ShotType::ForehandTopspin},
      {Vec3(2.0, 11.5, 0.9), Vec2(-3.5, -10.5), 18.0, ShotType::BackhandUnderspin},
      {Vec3(0.5, 12.2, 2.8), Vec2(2.0, -5.5), 35.0, ShotType::Serve},
      {Vec3(0.0, 3.0, 1.3), Vec2(-3.0, -6.0), 20.0, ShotType::ForehandVolley},
      {Vec3(-1.0, 12.0, 1.0), Vec2(0.0, -13.5), 24.0, ShotType::ForehandTopspin},  // long: still lands there
  };
  for (const Case& c : cases) {
    const PlacementFit fit = fit_to_placement(c.contact, c.placement, c.speed, c.shot, params, court);
    REQUIRE(fit.trajectory.bounce_pos().has_value());
    CHECK((fit.trajectory.bounce_pos()->head<2>() - c.placement).norm() < 0.2);
    CHECK(fit.speed_matched);
    CHECK(std::abs(fit.ground_speed - c.speed) <= 0.05 * c.speed);
    CHECK(*fit.trajectory.net_clearance > 0.0);
    CHECK(ground_speed(fit.trajectory) == doctest::Approx(fit.ground_speed));
  }
  // Placement on the hitter's own side cannot clear the net.
  CHECK_THROWS_AS(fit_to_placement(Vec3(0, 12, 1), Vec2(0, 4), 20.0, ShotType::ForehandTopspin, params, court),
                  NoFeasibleTrajectory);
}
