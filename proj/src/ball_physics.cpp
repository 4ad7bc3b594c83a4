#include "rallyforge/ball_physics.hpp"

#include "flight_integrator.hpp"
#include "rallyforge/errors.hpp"

#include <algorithm>
#include <stdexcept>

namespace rallyforge {

void FlightParams::validate() const {
  if (!(k > 0.0)) throw std::invalid_argument("flight: k must be > 0");
  if (!(drag_coefficient >= 0.0)) throw std::invalid_argument("flight: drag_coefficient must be >= 0");
  if (!(gravity > 0.0)) throw std::invalid_argument("flight: gravity must be > 0");
  if (!(restitution > 0.0 && restitution <= 1.0)) throw std::invalid_argument("flight: restitution must be in (0,1]");
  if (!(horizontal_retention > 0.0 && horizontal_retention <= 1.0))
    throw std::invalid_argument("flight: horizontal_retention must be in (0,1]");
  if (!(spin_retention >= 0.0) || !(spin_from_speed >= 0.0))
    throw std::invalid_argument("flight: post-bounce spin factors must be >= 0");
}

LaunchState LaunchState::from_signed(const Vec3& origin, const Vec2& heading, double v_h, double v_z, double spin) {
  LaunchState l;
  l.origin = origin;
  l.heading = heading;
  l.v_h = v_h;
  l.v_z = v_z;
  l.v_spin = std::abs(spin);
  l.spin_kind = spin > 0.0 ? SpinKind::Underspin : SpinKind::Topspin;
  return l;
}

PlanarState<double> step_flight(const PlanarState<double>& x, double signed_spin, double dt,
                                const FlightParams& params) {
  if (!(dt > 0.0 && dt <= 5e-3)) throw std::invalid_argument("step_flight: dt must be in (0, 5 ms]");
  return rk4_step(x, signed_spin, dt, params);
}

namespace {

struct SampleRecorder : detail::NullObserver {
  std::vector<TrajectorySample>* out;
  void on_knot(double t, const Vec3& p) {
    if (!out->empty() && t <= out->back().t) return;
    out->push_back({t, p});
  }
};

}  // namespace

BallTrajectory simulate_trajectory(const LaunchState& launch, const FlightParams& params, const CourtSpec& court,
                                   const StopCondition& stop, double dt) {
  if (!(launch.origin.z() > 0.0)) throw std::invalid_argument("simulate_trajectory: launch height must be > 0");
  if (stop.max_bounces < 1 || stop.max_bounces > 2)
    throw std::invalid_argument("simulate_trajectory: max_bounces must be 1 or 2");
  if (!(dt > 0.0 && dt <= 5e-3)) throw std::invalid_argument("simulate_trajectory: dt must be in (0, 5 ms]");

  BallTrajectory traj;
  traj.launch = launch;
  traj.dt = dt;
  traj.samples.reserve(static_cast<std::size_t>(std::min(stop.max_time, 3.0) / dt) + 8);

  struct Recorder : SampleRecorder {
    std::vector<BounceEvent>* bounces;
    bool on_bounce(const BounceEvent& b) {
      bounces->push_back(b);
      return true;
    }
  } rec;
  rec.out = &traj.samples;
  rec.bounces = &traj.bounces;

  const detail::FlightOutcome outcome = detail::integrate_flight(launch, params, court, stop, dt, rec);
  if (outcome.reason == FlightEnd::MaxTime && outcome.bounce_count == 0)
    throw NeverLands("ball still airborne after " + std::to_string(stop.max_time) + " s");
  traj.end_time = outcome.end_t;
  traj.end_pos = outcome.end_pos;
  traj.end_reason = outcome.reason;
  if (outcome.crossed_net) traj.net_clearance = outcome.net_clearance;
  return traj;
}

Vec3 BallTrajectory::position_at(double t) const {
  if (samples.empty()) return launch.origin;
  if (t <= samples.front().t) return samples.front().p;
  if (t >= samples.back().t) return samples.back().p;
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const TrajectorySample& s) { return v < s.t; });
  const TrajectorySample& b = *it;
  const TrajectorySample& a = *(it - 1);
  const double u = (t - a.t) / (b.t - a.t);
  return a.p + u * (b.p - a.p);
}

BallTrajectory BallTrajectory::mirrored() const {
  BallTrajectory m = *this;
  m.launch.origin = mirror(launch.origin);
  m.launch.heading = -launch.heading;
  for (auto& s : m.samples) s.p = mirror(s.p);
  for (auto& b : m.bounces) b.p = mirror(b.p);
  if (m.projected_bounce) m.projected_bounce->p = mirror(m.projected_bounce->p);
  m.end_pos = mirror(end_pos);
  return m;
}

Intercept intercept(const BallTrajectory& traj, double plane_y) {
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    const auto& a = traj.samples[i - 1];
    const auto& b = traj.samples[i];
    const double fa = a.p.y() - plane_y, fb = b.p.y() - plane_y;
    if (fa == 0.0) continue;
    if (fb == 0.0 || (fa > 0.0) != (fb > 0.0)) {
      const double u = fa / (fa - fb);
      return {a.t + u * (b.t - a.t), a.p + u * (b.p - a.p)};
    }
  }
  throw NoIntersection("trajectory ends before reaching y = " + std::to_string(plane_y));
}

double racket_side_sign(Side side, Handedness hand) {
  const double right = side == Side::Near ? -1.0 : 1.0;
  return hand == Handedness::Right ? right : -right;
}

Vec3 estimate_contact_point(const Vec2& player_pos, ShotType shot, Handedness hand, const ContactHeuristic& h) {
  const double racket = racket_side_sign(side_of(player_pos.y()), hand);
  const bool backhand = shot == ShotType::BackhandTopspin || shot == ShotType::BackhandUnderspin ||
                        shot == ShotType::BackhandVolley;
  const double lateral = backhand ? -racket : racket;
  double height = h.groundstroke_height;
  if (shot == ShotType::Serve) height = h.serve_height;
  else if (is_volley(shot)) height = h.volley_height;
  return {player_pos.x() + lateral * h.reach, player_pos.y(), height};
}

}  // namespace rallyforge
