#pragma once

// Reference flight integrator for tests: 7/8-order Runge-Kutta-Fehlberg in long
// double from Boost.Odeint, with bisection-located bounces. Written against the
// flight equations directly and shares no code with the library integrator.

#include "rallyforge/ball_physics.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <vector>

namespace oracle {

using State = std::array<long double, 4>;  // s, z, vh, vz

struct Flight {
  long double k, cd, g, e, retention, spin_keep, spin_speed;
  long double spin;  // signed: > 0 underspin

  void operator()(const State& x, State& dx, long double) const {
    const long double v = std::sqrt(x[2] * x[2] + x[3] * x[3]);
    long double cl = 0.0L;
    if (spin != 0.0L) cl = (spin > 0 ? 1.0L : -1.0L) / (2.0L + v / std::fabs(spin));
    dx[0] = x[2];
    dx[1] = x[3];
    dx[2] = -k * v * (cd * x[2] + cl * x[3]);
    dx[3] = k * v * (cl * x[2] - cd * x[3]) - g;
  }
};

struct Result {
  std::vector<rallyforge::Vec3> positions;  // at the query times
  std::vector<long double> bounce_times;
  std::vector<long double> bounce_ratio;  // |vz_out| / |vz_in|
};

/// Positions at sorted query times, using steps of `h`. Bounces after
/// `max_bounces` are not applied (the flight is frozen at the last bounce).
inline Result simulate(const rallyforge::LaunchState& launch, const rallyforge::FlightParams& p,
                       const std::vector<double>& queries, long double h, int max_bounces = 2) {
  boost::numeric::odeint::runge_kutta_fehlberg78<State, long double, State, long double> stepper;
  Flight f{p.k, p.drag_coefficient, p.gravity, p.restitution, p.horizontal_retention, p.spin_retention,
           p.spin_from_speed, launch.signed_spin()};
  State x{0.0L, launch.origin.z(), launch.v_h, launch.v_z};
  long double t = 0.0L;
  int bounces = 0;
  bool frozen = false;
  Result r;

  auto take = [&](const State& from, long double dt) {
    State out = from;
    stepper.do_step(f, out, t, dt);
    return out;
  };

  for (double q : queries) {
    while (!frozen && t < q - 1e-15L) {
      const long double dt = std::min<long double>(h, q - t);
      State x1 = take(x, dt);
      if (x1[1] < 0.0L) {
        long double lo = 0.0L, hi = dt;
        for (int i = 0; i < 200 && hi - lo > 1e-18L; ++i) {
          const long double mid = 0.5L * (lo + hi);
          if (take(x, mid)[1] > 0.0L) lo = mid;
          else hi = mid;
        }
        State xb = take(x, hi);
        t += hi;
        ++bounces;
        r.bounce_times.push_back(t);
        const long double vz_in = xb[3];
        xb[1] = 0.0L;
        xb[3] = -f.e * vz_in;
        r.bounce_ratio.push_back(std::fabs(xb[3] / vz_in));
        const long double new_spin = f.spin_keep * std::fabs(f.spin) + f.spin_speed * std::fabs(xb[2]);
        xb[2] *= f.retention;
        f.spin = -new_spin;
        x = xb;
        if (bounces >= max_bounces) frozen = true;
        continue;
      }
      x = x1;
      t += dt;
    }
    r.positions.emplace_back(static_cast<double>(launch.origin.x() + x[0] * launch.heading.x()),
                             static_cast<double>(launch.origin.y() + x[0] * launch.heading.y()),
                             static_cast<double>(x[1]));
  }
  return r;
}

}  // namespace oracle
