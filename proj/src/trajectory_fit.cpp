#include "rallyforge/trajectory_fit.hpp"

#include "flight_integrator.hpp"
#include "rallyforge/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rallyforge {

void GridSpec::validate() const {
  if (v_h_steps < 1 || v_z_steps < 1) throw std::invalid_argument("grid: step counts must be >= 1");
  if (!(v_h_min > 0.0) || v_h_max < v_h_min) throw std::invalid_argument("grid: bad v_h range");
  if (v_z_max < v_z_min) throw std::invalid_argument("grid: bad v_z range");
  if (spins.empty()) throw std::invalid_argument("grid: spins must not be empty");
  for (double s : spins)
    if (!(s >= 0.0)) throw std::invalid_argument("grid: spins must be >= 0");
  if (!(w_pos >= 0.0) || !(w_time >= 0.0) || !(w_pos + w_time > 0.0))
    throw std::invalid_argument("grid: weights must be >= 0 and not both zero");
  if (!(tolerance > 0.0)) throw std::invalid_argument("grid: tolerance must be > 0");
  if (!(search_dt > 0.0 && search_dt <= 5e-3) || !(dt > 0.0 && dt <= 5e-3))
    throw std::invalid_argument("grid: integration steps must be in (0, 5 ms]");
}

double ground_speed(const BallTrajectory& traj) {
  const auto tb = traj.bounce_time();
  const auto pb = traj.bounce_pos();
  if (!tb || !pb || !(*tb > 0.0)) return 0.0;
  return (pb->head<2>() - traj.launch.origin.head<2>()).norm() / *tb;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Contact-to-contact fit

struct ContactFitContext {
  ContactPoint a, b;
  Vec2 heading;
  Side receiver;
  bool volley;
  const FlightParams* params;
  const CourtSpec* court;
  const GridSpec* grid;
};

struct Candidate {
  bool valid = false;
  double residual = kInf;
};

struct ContactFitObserver : detail::NullObserver {
  const ContactFitContext* ctx;
  double time_limit;
  bool invalid = false;

  bool on_net(double clearance, const Vec3&) {
    if (clearance <= 0.0) invalid = true;
    return !invalid;
  }
  bool on_bounce(const BounceEvent& b) {
    // Volleys are taken out of the air; groundstrokes allow exactly one bounce.
    if (ctx->volley || b.t <= 0.0) invalid = true;
    else if (!in_singles_half(Vec2(b.p.head<2>()), ctx->receiver, *ctx->court)) invalid = true;
    return !invalid;
  }
  bool keep_going(double t) const { return t <= time_limit; }
};

double contact_residual(const ContactFitContext& ctx, double end_t, const Vec3& end_pos) {
  return ctx.grid->w_pos * (end_pos - ctx.b.pos).norm() + ctx.grid->w_time * std::abs(ctx.a.t + end_t - ctx.b.t);
}

Candidate evaluate(const ContactFitContext& ctx, const LaunchState& launch, double best, double dt) {
  ContactFitObserver obs;
  obs.ctx = &ctx;
  const double slack = std::min(best, ctx.grid->residual_cap);
  obs.time_limit = (ctx.b.t - ctx.a.t) + (ctx.grid->w_time > 0.0 ? slack / ctx.grid->w_time : 10.0);
  StopCondition stop;
  stop.plane_y = ctx.b.pos.y();
  stop.max_bounces = 2;
  stop.max_time = obs.time_limit + dt;
  const detail::FlightOutcome out = detail::integrate_flight(launch, *ctx.params, *ctx.court, stop, dt, obs);
  Candidate c;
  if (out.aborted || obs.invalid || out.reason != FlightEnd::ReachedPlane || !out.crossed_net) return c;
  if (!ctx.volley && out.bounce_count != 1) return c;
  c.valid = true;
  c.residual = contact_residual(ctx, out.end_t, out.end_pos);
  return c;
}

LaunchState launch_for(const ContactFitContext& ctx, double v_h, double v_z, double signed_spin) {
  return LaunchState::from_signed(ctx.a.pos, ctx.heading, v_h, v_z, signed_spin);
}

}  // namespace

FitResult fit_trajectory(const ContactPoint& a, const ContactPoint& b, const FlightParams& params,
                         const CourtSpec& court, const GridSpec& grid, bool volley) {
  if (!(a.t < b.t)) throw std::invalid_argument("fit_trajectory: contact times must increase");
  if (side_of(a.pos.y()) == side_of(b.pos.y()) || a.pos.y() == 0.0 || b.pos.y() == 0.0)
    throw std::invalid_argument("fit_trajectory: contacts must be on opposite sides of the net");
  if (!(a.pos.z() > 0.0)) throw std::invalid_argument("fit_trajectory: first contact must be above ground");

  ContactFitContext ctx{a, b, (b.pos.head<2>() - a.pos.head<2>()).normalized(), side_of(b.pos.y()), volley,
                        &params, &court, &grid};

  std::vector<double> signed_spins;
  for (double s : grid.spins) signed_spins.push_back(-s);  // topspin
  if (grid.both_spin_kinds)
    for (double s : grid.spins) signed_spins.push_back(s);  // underspin

  double best = kInf;
  long best_index = -1;
  LaunchState best_launch;
  long index = 0;
  for (double spin : signed_spins) {
    for (int i = 0; i < grid.v_h_steps; ++i) {
      for (int j = 0; j < grid.v_z_steps; ++j, ++index) {
        const LaunchState launch = launch_for(ctx, grid.v_h_at(i), grid.v_z_at(j), spin);
        const Candidate c = evaluate(ctx, launch, best, grid.search_dt);
        if (c.valid && c.residual < best) {
          best = c.residual;
          best_index = index;
          best_launch = launch;
        }
      }
    }
  }
  if (best_index < 0) throw NoFeasibleTrajectory("no grid launch clears the net and reaches the second contact");

  FitResult result;
  result.grid_residual = best;
  result.grid_index = best_index;
  result.grid_launch = best_launch;

  LaunchState chosen = best_launch;
  if (grid.polish) {
    const double h_step0 = grid.v_h_steps > 1 ? (grid.v_h_max - grid.v_h_min) / (grid.v_h_steps - 1) : 1.0;
    const double z_step0 = grid.v_z_steps > 1 ? (grid.v_z_max - grid.v_z_min) / (grid.v_z_steps - 1) : 1.0;
    std::array<double, 3> x = {chosen.v_h, chosen.v_z, chosen.signed_spin()};
    // Spin stays fixed when the grid offers only one spin.
    const int axes = signed_spins.size() > 1 ? 3 : 2;
    std::array<double, 3> step = {0.5 * h_step0, 0.5 * z_step0, 1.0};
    double fx = best;
    for (int iter = 0; iter < 200 && step[0] > 1e-4; ++iter) {
      int best_axis = -1;
      double best_dir = 0.0, best_f = fx;
      for (int axis = 0; axis < axes; ++axis) {
        for (double dir : {-1.0, 1.0}) {
          std::array<double, 3> y = x;
          y[axis] += dir * step[axis];
          if (y[0] <= 0.0) continue;
          const Candidate c = evaluate(ctx, launch_for(ctx, y[0], y[1], y[2]), best_f, grid.search_dt);
          if (c.valid && c.residual < best_f) {
            best_f = c.residual;
            best_axis = axis;
            best_dir = dir;
          }
        }
      }
      if (best_axis < 0) {
        for (double& s : step) s *= 0.5;
      } else {
        x[best_axis] += best_dir * step[best_axis];
        fx = best_f;
      }
    }
    chosen = launch_for(ctx, x[0], x[1], x[2]);
  }

  StopCondition stop;
  stop.plane_y = b.pos.y();
  stop.max_bounces = 2;
  stop.max_time = (b.t - a.t) + grid.residual_cap / std::max(grid.w_time, 1e-9) + 1.0;

  auto finalize = [&](const LaunchState& launch) -> std::optional<FitResult> {
    BallTrajectory traj;
    try {
      traj = simulate_trajectory(launch, params, court, stop, grid.dt);
    } catch (const NeverLands&) {
      return std::nullopt;
    }
    if (traj.end_reason != FlightEnd::ReachedPlane || !traj.net_clearance || *traj.net_clearance <= 0.0)
      return std::nullopt;
    if (volley ? !traj.bounces.empty() : traj.bounces.size() != 1) return std::nullopt;
    if (!volley && !in_singles_half(Vec2(traj.bounces.front().p.head<2>()), ctx.receiver, court)) return std::nullopt;
    if (volley) {
      StopCondition to_ground;
      to_ground.max_bounces = 1;
      to_ground.max_time = 10.0;
      try {
        const BallTrajectory full = simulate_trajectory(launch, params, court, to_ground, grid.dt);
        if (!full.bounces.empty()) traj.projected_bounce = full.bounces.front();
      } catch (const NeverLands&) {
      }
    }
    FitResult r = result;
    r.residual = contact_residual(ctx, traj.end_time, traj.end_pos);
    r.trajectory = std::move(traj);
    return r;
  };

  std::optional<FitResult> fitted = finalize(chosen);
  if (!fitted || (grid.polish && fitted->residual > grid.tolerance)) {
    if (auto from_grid = finalize(best_launch); from_grid && (!fitted || from_grid->residual < fitted->residual))
      fitted = std::move(from_grid);
  }
  if (!fitted) throw NoFeasibleTrajectory("grid optimum is infeasible at the output integration step");
  if (fitted->residual > grid.tolerance)
    throw NoFeasibleTrajectory("best fit residual " + std::to_string(fitted->residual) + " exceeds tolerance");
  return std::move(*fitted);
}

// ---------------------------------------------------------------------------
// Contact-to-placement fit

namespace {

struct BounceProbe {
  bool landed = false;
  double t = 0.0;
  double distance = 0.0;
  bool clears_net = false;
};

struct NetObserver : detail::NullObserver {
  bool clears = false;
  bool on_net(double clearance, const Vec3&) {
    clears = clearance > 0.0;
    return true;
  }
};

BounceProbe probe_bounce(const LaunchState& launch, const FlightParams& params, const CourtSpec& court,
                         double dt, double max_time) {
  NetObserver obs;
  StopCondition stop;
  stop.max_bounces = 1;
  stop.max_time = max_time;
  const detail::FlightOutcome out = detail::integrate_flight(launch, params, court, stop, dt, obs);
  BounceProbe p;
  if (out.bounce_count == 0) return p;
  p.landed = true;
  p.t = out.first_bounce.t;
  p.distance = (out.first_bounce.p.head<2>() - launch.origin.head<2>()).norm();
  p.clears_net = out.crossed_net && obs.clears;
  return p;
}

std::vector<double> spin_preferences(ShotType shot) {
  // Signed spins, preferred first: < 0 topspin, > 0 underspin.
  switch (shot) {
    case ShotType::Serve: return {-5.0, -2.0, 0.0, -10.0};
    case ShotType::ForehandUnderspin:
    case ShotType::BackhandUnderspin: return {5.0, 2.0, 10.0, 0.0};
    case ShotType::ForehandVolley:
    case ShotType::BackhandVolley: return {2.0, 5.0, 0.0, -2.0};
    default: return {-10.0, -5.0, -20.0, -2.0, 0.0};
  }
}

}  // namespace

PlacementFit fit_to_placement(const Vec3& contact, const Vec2& placement, double target_speed, ShotType shot,
                              const FlightParams& params, const CourtSpec& court,
                              const PlacementFitOptions& opt) {
  if (!(contact.z() > 0.0)) throw std::invalid_argument("fit_to_placement: contact must be above ground");
  if (!(target_speed > 0.0)) throw std::invalid_argument("fit_to_placement: ground speed must be > 0");
  const Vec2 delta = placement - contact.head<2>();
  const double distance = delta.norm();
  if (!(distance > 0.5)) throw NoFeasibleTrajectory("placement coincides with the contact point");
  const Vec2 heading = delta / distance;
  const double target_time = distance / target_speed;
  const double g = params.gravity;

  auto launch_of = [&](double v_h, double v_z, double spin) {
    return LaunchState::from_signed(contact, heading, v_h, v_z, spin);
  };
  auto probe = [&](double v_h, double v_z, double spin) {
    return probe_bounce(launch_of(v_h, v_z, spin), params, court, opt.search_dt, opt.max_time);
  };

  std::optional<LaunchState> solution;
  bool speed_ok = false;

  // Newton on (v_h, v_z) matching bounce distance and bounce time.
  for (double spin : spin_preferences(shot)) {
    Eigen::Vector2d v(1.1 * target_speed, (0.5 * g * target_time * target_time - contact.z()) / target_time);
    bool converged = false;
    for (int iter = 0; iter < 25; ++iter) {
      const BounceProbe p0 = probe(v(0), v(1), spin);
      if (!p0.landed) break;
      const Eigen::Vector2d f(p0.distance - distance, p0.t - target_time);
      if (std::abs(f(0)) < 0.01 && std::abs(f(1)) < 1e-3 * target_time) {
        converged = p0.clears_net;
        break;
      }
      constexpr double eps = 1e-3;
      const BounceProbe ph = probe(v(0) + eps, v(1), spin);
      const BounceProbe pz = probe(v(0), v(1) + eps, spin);
      if (!ph.landed || !pz.landed) break;
      Eigen::Matrix2d jac;
      jac << (ph.distance - p0.distance) / eps, (pz.distance - p0.distance) / eps, (ph.t - p0.t) / eps,
          (pz.t - p0.t) / eps;
      if (std::abs(jac.determinant()) < 1e-12) break;
      Eigen::Vector2d dv = -jac.partialPivLu().solve(f);
      const double n = dv.norm();
      if (n > 8.0) dv *= 8.0 / n;
      v += dv;
      v(0) = std::clamp(v(0), 1.0, 90.0);
      v(1) = std::clamp(v(1), -40.0, 40.0);
    }
    if (converged) {
      solution = launch_of(v(0), v(1), spin);
      speed_ok = true;
      break;
    }
  }

  // Fallback: match the distance exactly and the speed as closely as possible.
  if (!solution) {
    double best_err = kInf;
    for (double spin : spin_preferences(shot)) {
      for (double v_h = 3.0; v_h <= 70.0; v_h += 1.0) {
        double lo = -30.0, hi = 30.0;
        const BounceProbe plo = probe(v_h, lo, spin);
        const BounceProbe phi = probe(v_h, hi, spin);
        if (!plo.landed || plo.distance > distance) continue;
        if (phi.landed && phi.distance < distance) continue;
        for (int it = 0; it < 40 && hi - lo > 1e-4; ++it) {
          const double mid = 0.5 * (lo + hi);
          const BounceProbe pm = probe(v_h, mid, spin);
          if (pm.landed && pm.distance < distance) lo = mid;
          else hi = mid;
        }
        const BounceProbe p = probe(v_h, lo, spin);
        if (!p.landed || !p.clears_net || std::abs(p.distance - distance) > 0.5 * opt.position_tolerance) continue;
        const double err = std::abs(distance / p.t - target_speed) / target_speed;
        if (err < best_err) {
          best_err = err;
          solution = launch_of(v_h, lo, spin);
        }
      }
    }
    speed_ok = best_err <= opt.speed_tolerance;
  }
  if (!solution) throw NoFeasibleTrajectory("no net-clearing flight lands at the placement");

  StopCondition stop;
  stop.max_bounces = 2;
  stop.max_time = opt.max_time;
  PlacementFit fit;
  fit.trajectory = simulate_trajectory(*solution, params, court, stop, opt.dt);
  const auto bounce = fit.trajectory.bounce_pos();
  if (!bounce || (bounce->head<2>() - placement).norm() > opt.position_tolerance || !fit.trajectory.net_clearance ||
      *fit.trajectory.net_clearance <= 0.0)
    throw NoFeasibleTrajectory("placement fit drifted at the output integration step");
  fit.ground_speed = ground_speed(fit.trajectory);
  fit.speed_matched = speed_ok && std::abs(fit.ground_speed - target_speed) <= opt.speed_tolerance * target_speed;
  return fit;
}

}  // namespace rallyforge
