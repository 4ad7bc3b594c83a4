#pragma once

#include "rallyforge/ball_physics.hpp"

#include <vector>

namespace rallyforge {

struct ContactPoint {
  Vec3 pos = Vec3::Zero();
  double t = 0.0;
};

/// Launch-velocity search grid and fit objective.
struct GridSpec {
  double v_h_min = 5.0, v_h_max = 60.0;
  int v_h_steps = 56;
  double v_z_min = -10.0, v_z_max = 15.0;
  int v_z_steps = 26;
  std::vector<double> spins = {0.0, 2.0, 5.0, 10.0, 20.0};
  bool both_spin_kinds = true;

  double w_pos = 1.0;    ///< per meter of end-position error
  double w_time = 10.0;  ///< per second of end-time error
  double tolerance = 0.5;
  /// Candidates whose residual is already above this are cut short.
  double residual_cap = 20.0;

  double search_dt = 5e-3;  ///< integration step while searching
  double dt = 1e-3;         ///< integration step of the returned trajectory
  bool polish = true;       ///< compass refinement around the grid optimum

  double v_h_at(int i) const { return v_h_steps == 1 ? v_h_min : v_h_min + (v_h_max - v_h_min) * i / (v_h_steps - 1); }
  double v_z_at(int j) const { return v_z_steps == 1 ? v_z_min : v_z_min + (v_z_max - v_z_min) * j / (v_z_steps - 1); }
  void validate() const;
};

struct FitResult {
  BallTrajectory trajectory;  ///< ends where it crosses the second contact's plane
  double residual = 0.0;      ///< objective of the returned trajectory
  double grid_residual = 0.0; ///< best objective over the grid alone
  LaunchState grid_launch;
  long grid_index = -1;       ///< flattened (kind, spin, v_h, v_z) index of the grid optimum
};

/// Launch from `a` that clears the net, bounces in the receiver's singles half
/// (unless `volley`) and best matches the time and place of `b`.
/// Throws NoFeasibleTrajectory.
FitResult fit_trajectory(const ContactPoint& a, const ContactPoint& b, const FlightParams& params,
                         const CourtSpec& court, const GridSpec& grid, bool volley);

struct PlacementFitOptions {
  double position_tolerance = 0.2;
  double speed_tolerance = 0.05;  ///< relative
  double search_dt = 4e-3;
  double dt = 1e-3;
  double max_time = 6.0;
};

struct PlacementFit {
  BallTrajectory trajectory;  ///< runs to the second bounce
  double ground_speed = 0.0;  ///< contact-to-bounce average ground speed
  bool speed_matched = false;
};

/// Launch from `contact` that clears the net and bounces at `placement` with the
/// requested contact-to-bounce ground speed. Spin family follows the shot type.
/// Throws NoFeasibleTrajectory when no net-clearing flight lands at the placement.
PlacementFit fit_to_placement(const Vec3& contact, const Vec2& placement, double ground_speed, ShotType shot,
                              const FlightParams& params, const CourtSpec& court,
                              const PlacementFitOptions& options = {});

/// Average ground speed from launch to first (or projected) bounce.
double ground_speed(const BallTrajectory& traj);

}  // namespace rallyforge
