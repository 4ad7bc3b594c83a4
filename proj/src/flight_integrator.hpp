#pragma once

// Fixed-step flight integration with event refinement, shared by simulation
// and the fitting searches.

#include "rallyforge/ball_physics.hpp"

#include <algorithm>
#include <limits>

namespace rallyforge::detail {

struct FlightOutcome {
  FlightEnd reason = FlightEnd::MaxTime;
  bool aborted = false;
  double end_t = 0.0;
  Vec3 end_pos = Vec3::Zero();
  int bounce_count = 0;
  BounceEvent first_bounce;
  bool crossed_net = false;
  double net_clearance = 0.0;
};

inline Vec3 world_position(const LaunchState& launch, double s, double z) {
  return {launch.origin.x() + s * launch.heading.x(), launch.origin.y() + s * launch.heading.y(), z};
}

/// Observer concept:
///   void on_knot(double t, const Vec3& p);
///   bool on_net(double clearance, const Vec3& p);   // false aborts
///   bool on_bounce(const BounceEvent& b);            // false aborts
///   bool keep_going(double t);                       // false aborts
template <typename Observer>
FlightOutcome integrate_flight(const LaunchState& launch, const FlightParams& params, const CourtSpec& court,
                               const StopCondition& stop, double dt, Observer& obs) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  FlightOutcome out;
  PlanarState<double> x(0.0, launch.origin.z(), launch.v_h, launch.v_z);
  double spin = launch.signed_spin();
  double t = 0.0;
  long k = 0;
  const double hy = launch.heading.y();
  const double y_start = launch.origin.y();

  auto finish = [&](FlightEnd reason, double te, const Vec3& pe) {
    out.reason = reason;
    out.end_t = te;
    out.end_pos = pe;
    obs.on_knot(te, pe);
  };

  obs.on_knot(0.0, world_position(launch, 0.0, x(1)));
  while (true) {
    if (t >= stop.max_time) {
      finish(FlightEnd::MaxTime, t, world_position(launch, x(0), x(1)));
      return out;
    }
    if (!obs.keep_going(t)) {
      out.aborted = true;
      out.end_t = t;
      out.end_pos = world_position(launch, x(0), x(1));
      return out;
    }
    const double t_grid = static_cast<double>(k + 1) * dt;
    const double h = t_grid - t;
    if (h < 1e-12) {
      ++k;
      continue;
    }
    const PlanarState<double> x1 = rk4_step(x, spin, h, params);

    // Fractions of the step at which each event occurs (linear estimate).
    double f_ground = inf, f_plane = inf, f_net = inf;
    if (x1(1) < 0.0) f_ground = x(1) / (x(1) - x1(1));
    const double y0 = y_start + x(0) * hy, y1 = y_start + x1(0) * hy;
    if (stop.plane_y) {
      const double a = y0 - *stop.plane_y, b = y1 - *stop.plane_y;
      if (a != 0.0 && (b == 0.0 || (a > 0.0) != (b > 0.0))) f_plane = a / (a - b);
    }
    if (!out.crossed_net && y0 != 0.0 && (y1 == 0.0 || (y0 > 0.0) != (y1 > 0.0))) f_net = y0 / (y0 - y1);

    if (f_net < inf && f_net <= std::min(f_ground, f_plane)) {
      const double s = x(0) + f_net * (x1(0) - x(0));
      const double z = std::max(0.0, x(1) + f_net * (x1(1) - x(1)));
      const Vec3 p = world_position(launch, s, z);
      out.crossed_net = true;
      out.net_clearance = z - court.net_height(p.x());
      if (!obs.on_net(out.net_clearance, p)) {
        out.aborted = true;
        out.end_t = t + f_net * h;
        out.end_pos = p;
        return out;
      }
    }

    if (f_plane <= f_ground && f_plane < inf) {
      double tau = f_plane * h;
      PlanarState<double> xp = rk4_step(x, spin, tau, params);
      // One Newton correction of the crossing instant.
      const double rate = xp(2) * hy;
      if (rate != 0.0) {
        tau = std::clamp(tau - (y_start + xp(0) * hy - *stop.plane_y) / rate, 0.0, h);
        xp = rk4_step(x, spin, tau, params);
      }
      const Vec3 p = world_position(launch, xp(0), std::max(0.0, xp(1)));
      finish(FlightEnd::ReachedPlane, t + tau, p);
      return out;
    }

    if (f_ground < inf) {
      double tau = f_ground * h;
      PlanarState<double> xb = rk4_step(x, spin, tau, params);
      if (xb(3) < 0.0) {
        tau = std::clamp(tau - xb(1) / xb(3), 0.0, h);
        xb = rk4_step(x, spin, tau, params);
      }
      BounceEvent b;
      b.t = t + tau;
      b.p = world_position(launch, xb(0), 0.0);
      b.vz_in = xb(3);
      b.vh_in = xb(2);
      b.spin_in = spin;
      b.vz_out = -params.restitution * xb(3);
      b.vh_out = params.horizontal_retention * xb(2);
      b.spin_out = -(params.spin_retention * std::abs(spin) + params.spin_from_speed * std::abs(xb(2)));
      xb(1) = 0.0;
      xb(2) = b.vh_out;
      xb(3) = b.vz_out;
      spin = b.spin_out;
      x = xb;
      t = b.t;
      if (out.bounce_count == 0) out.first_bounce = b;
      ++out.bounce_count;
      if (!obs.on_bounce(b)) {
        out.aborted = true;
        out.end_t = t;
        out.end_pos = b.p;
        return out;
      }
      if (out.bounce_count >= stop.max_bounces) {
        finish(FlightEnd::LastBounce, t, b.p);
        return out;
      }
      obs.on_knot(t, b.p);
      continue;
    }

    x = x1;
    t = t_grid;
    ++k;
    obs.on_knot(t, world_position(launch, x(0), x(1)));
  }
}

/// Observer that accepts everything and records nothing.
struct NullObserver {
  void on_knot(double, const Vec3&) {}
  bool on_net(double, const Vec3&) { return true; }
  bool on_bounce(const BounceEvent&) { return true; }
  bool keep_going(double) { return true; }
};

}  // namespace rallyforge::detail
