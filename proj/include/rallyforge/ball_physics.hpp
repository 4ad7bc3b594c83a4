#pragma once

#include "rallyforge/court.hpp"
#include "rallyforge/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <vector>

namespace rallyforge {

/// Aerodynamic and bounce constants.
struct FlightParams {
  double k = 0.0;                 ///< rho*pi*R^2/(2m), 1/m
  double drag_coefficient = 0.55;
  double gravity = 9.81;
  double restitution = 0.75;      ///< vertical coefficient of restitution
  double horizontal_retention = 0.8;
  /// Post-bounce topspin surface speed = spin_retention*|spin| + spin_from_speed*|v_h|.
  double spin_retention = 0.6;
  double spin_from_speed = 0.2;

  FlightParams() : k(ball_k(0.033, 0.057, 1.21)) {}

  static double ball_k(double radius, double mass, double air_density) {
    return air_density * M_PI * radius * radius / (2.0 * mass);
  }
  void validate() const;
};

enum class SpinKind : std::uint8_t { Topspin, Underspin };

/// Launch conditions. The flight is planar: it stays in the vertical plane
/// through `origin` along `heading`.
struct LaunchState {
  Vec3 origin = Vec3::Zero();
  Vec2 heading = Vec2(0.0, -1.0);  ///< unit ground direction
  double v_h = 0.0;
  double v_z = 0.0;
  double v_spin = 0.0;
  SpinKind spin_kind = SpinKind::Topspin;

  /// Spin folded into one signed number: > 0 underspin, < 0 topspin.
  double signed_spin() const { return spin_kind == SpinKind::Underspin ? v_spin : -v_spin; }
  static LaunchState from_signed(const Vec3& origin, const Vec2& heading, double v_h, double v_z, double spin);
};

/// Planar flight state: (s, z, v_h, v_z) with s the ground distance along the heading.
template <typename Scalar>
using PlanarState = Eigen::Matrix<Scalar, 4, 1>;

/// Lift coefficient with the spin direction folded into its sign.
template <typename Scalar>
Scalar lift_coefficient(Scalar speed, Scalar signed_spin) {
  using std::abs;
  if (signed_spin == Scalar(0)) return Scalar(0);
  return signed_spin / (Scalar(2) * abs(signed_spin) + speed);
}

/// Time derivative of the planar flight state under drag, Magnus lift and gravity.
template <typename Scalar>
PlanarState<Scalar> flight_derivative(const PlanarState<Scalar>& x, Scalar signed_spin, const FlightParams& params) {
  using std::sqrt;
  const Scalar vh = x(2), vz = x(3);
  const Scalar v = sqrt(vh * vh + vz * vz);
  const Scalar cl = lift_coefficient(v, signed_spin);
  const Scalar kv = Scalar(params.k) * v;
  const Scalar cd = Scalar(params.drag_coefficient);
  PlanarState<Scalar> dx;
  dx << vh, vz, -kv * (cd * vh + cl * vz), kv * (cl * vh - cd * vz) - Scalar(params.gravity);
  return dx;
}

/// One classical Runge-Kutta step.
template <typename Scalar>
PlanarState<Scalar> rk4_step(const PlanarState<Scalar>& x, Scalar signed_spin, Scalar dt, const FlightParams& params) {
  const PlanarState<Scalar> k1 = flight_derivative(x, signed_spin, params);
  const PlanarState<Scalar> k2 = flight_derivative<Scalar>(x + (dt / 2) * k1, signed_spin, params);
  const PlanarState<Scalar> k3 = flight_derivative<Scalar>(x + (dt / 2) * k2, signed_spin, params);
  const PlanarState<Scalar> k4 = flight_derivative<Scalar>(x + dt * k3, signed_spin, params);
  return x + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Checked single step; dt must lie in (0, 5 ms]. Spin is held constant.
PlanarState<double> step_flight(const PlanarState<double>& x, double signed_spin, double dt, const FlightParams& params);

struct TrajectorySample {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
};

struct BounceEvent {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  double vz_in = 0.0, vz_out = 0.0;
  double vh_in = 0.0, vh_out = 0.0;
  double spin_in = 0.0, spin_out = 0.0;  ///< signed
};

enum class FlightEnd : std::uint8_t { ReachedPlane, LastBounce, MaxTime };

/// A sampled ball flight starting at local time 0 (the launch instant).
/// Samples sit on a fixed dt grid with extra knots at the bounce and the end.
struct BallTrajectory {
  LaunchState launch;
  double dt = 1e-3;
  std::vector<TrajectorySample> samples;
  std::vector<BounceEvent> bounces;
  /// For flights that stop before landing: where the ball would have bounced.
  std::optional<BounceEvent> projected_bounce;
  std::optional<double> net_clearance;
  double end_time = 0.0;
  Vec3 end_pos = Vec3::Zero();
  FlightEnd end_reason = FlightEnd::MaxTime;

  std::optional<double> bounce_time() const {
    if (!bounces.empty()) return bounces.front().t;
    if (projected_bounce) return projected_bounce->t;
    return std::nullopt;
  }
  std::optional<Vec3> bounce_pos() const {
    if (!bounces.empty()) return bounces.front().p;
    if (projected_bounce) return projected_bounce->p;
    return std::nullopt;
  }
  double start_time() const { return samples.empty() ? 0.0 : samples.front().t; }
  /// Piecewise-linear position; clamps outside [0, end_time].
  Vec3 position_at(double t) const;
  /// Copy rotated 180 degrees about the net center.
  BallTrajectory mirrored() const;
};

struct StopCondition {
  std::optional<double> plane_y;  ///< stop on crossing this y (start excluded)
  int max_bounces = 2;            ///< stop at this bounce (1 or 2)
  double max_time = 6.0;
};

/// Integrates from the launch until the stop condition. Throws NeverLands when
/// the ball is still airborne at max_time without reaching the stop plane.
BallTrajectory simulate_trajectory(const LaunchState& launch, const FlightParams& params, const CourtSpec& court,
                                   const StopCondition& stop, double dt = 1e-3);

struct Intercept {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
};

/// First crossing of the plane y = plane_y strictly after the start. Throws NoIntersection.
Intercept intercept(const BallTrajectory& traj, double plane_y);

struct ContactHeuristic {
  double reach = 0.8;
  double serve_height = 2.8;
  double groundstroke_height = 1.0;
  double volley_height = 1.3;
};

/// Racket-head position at contact for a player standing at `player_pos`.
Vec3 estimate_contact_point(const Vec2& player_pos, ShotType shot, Handedness hand,
                            const ContactHeuristic& heuristic = {});

/// Lateral unit sign (+1/-1 in x) of the player's racket-hand side.
double racket_side_sign(Side side, Handedness hand);

}  // namespace rallyforge
