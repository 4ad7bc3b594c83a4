#pragma once

// Straight-line re-implementation of the clip cost and an exhaustive search,
// plus query and clip builders shared by the search tests.

#include "rallyforge/clip_search.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace search_oracle {

using namespace rallyforge;

inline const CourtSpec kCourt{};
inline const FlightParams kParams{};

inline BallTrajectory incoming_ball(Vec3 origin, Vec2 heading, double v_h, double v_z, double spin) {
  StopCondition stop;
  stop.max_bounces = 2;
  return simulate_trajectory(LaunchState::from_signed(origin, heading.normalized(), v_h, v_z, spin), kParams, kCourt,
                             stop);
}

inline BallTrajectory default_ball() { return incoming_ball(Vec3(0.5, -11.5, 1.0), Vec2(0.05, 1.0), 28.0, 4.0, -5.0); }

// A clip whose racket meets `ball` exactly at its plane-11.5 crossing.
inline ShotCycleClip exact_clip(const BallTrajectory& ball, const std::string& id, Vec2 start, Vec2 recovery) {
  ShotCycleClip c;
  c.id = id;
  c.player_id = "alpha";
  c.opponent_id = "beta";
  const double t_c = intercept(ball, 11.5).t;
  const Vec3 at = ball.position_at(t_c);
  c.t_c = t_c;
  c.t_r = t_c + 1.0;
  c.shot_type = ShotType::ForehandTopspin;
  c.outcome = ShotOutcome::InPlay;
  c.x_c = at;
  c.x_b = Vec2(-2.0, -9.0);
  c.t_b = t_c + 0.9;
  c.v_b = 21.0;
  c.incoming_start = ball.launch.origin;
  c.incoming_bounce = ball.bounce_pos()->head<2>();
  const Vec2 cp = at.head<2>() - Vec2(0.8, 0.0);
  const std::size_t n = trace_length(c.t_r, c.trace_dt);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i * c.trace_dt;
    const Vec2 p = t <= t_c ? Vec2(start + smoothstep(t / t_c) * (cp - start))
                            : Vec2(cp + smoothstep((t - t_c) / (c.t_r - t_c)) * (recovery - cp));
    c.player_trace.push_back(p);
    c.opponent_trace.emplace_back(0.0, -12.0);
    Pose pose;
    for (int k = 0; k < kKeypoints; ++k) pose.row(k) << std::sin(t + k), std::cos(2 * t + k);
    c.pose_trace.push_back(pose);
  }
  return c;
}

inline SearchQuery replay_query(const ShotCycleClip& c, const BallTrajectory& ball) {
  SearchQuery q;
  q.behavior.shot = *c.shot_type;
  q.behavior.velocity = *c.v_b;
  q.behavior.placement = *c.x_b;
  q.behavior.recovery = c.recovery_position();
  q.incoming = &ball;
  q.start_pos = c.player_trace.front();
  q.start_pose = c.pose_trace.front();
  q.start_velocity = c.player_velocity_at(0.0);
  return q;
}

// --- straight-line reference --------------------------------------------------------

template <typename T>
inline T lerp_trace(const std::vector<T>& v, double dt, double t) {
  const double u = std::clamp(t / dt, 0.0, double(v.size() - 1));
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(u), v.size() - 2);
  const double f = u - i;
  return T((1 - f) * v[i] + f * v[i + 1]);
}

inline double ratio_cost(Vec2 a, Vec2 b) {
  const double la = std::max(a.norm(), 0.01), lb = std::max(b.norm(), 0.01);
  return la > lb ? la / lb - 1 : lb / la - 1;
}

inline double cos_cost(Vec2 a, Vec2 b) {
  if (a.norm() < 0.01 || b.norm() < 0.01) return 0.0;
  return 1.0 - (a.x() * b.x() + a.y() * b.y()) / (a.norm() * b.norm());
}

struct Ref {
  double total;
  bool feasible;
};

inline Ref reference_cost(const ShotCycleClip& c, const SearchQuery& q, const CostWeights& w, const SearchThresholds& th) {
  const double dt = c.trace_dt;
  double pose = 0.0;
  for (int k = 0; k < kKeypoints; ++k) pose += (q.start_pose.row(k) - c.pose_trace[0].row(k)).norm();
  pose /= kKeypoints;
  const Vec2 v0 = (lerp_trace(c.player_trace, dt, dt) - c.player_trace[0]) / dt;
  const double velo = (q.start_velocity - v0).norm();
  if (!c.has_contact()) return {w.pose * pose + w.velo * velo, true};
  if (*c.shot_type != q.behavior.shot) return {INFINITY, false};
  const double t_c = *c.t_c;
  if (t_c > q.incoming->end_time) return {INFINITY, false};

  const Vec3 ball = q.incoming->position_at(t_c);
  const Vec2 shift = q.start_pos - c.player_trace[0];
  const Vec2 e_c = ball.head<2>() - (c.x_c->head<2>() + shift);
  const double contact = std::abs(ball.z() - c.x_c->z());

  const Vec2 p_c = lerp_trace(c.player_trace, dt, t_c);
  const Vec2 p_r = lerp_trace(c.player_trace, dt, c.t_r);
  const Vec2 d_react = p_c - c.player_trace[0];
  const Vec2 d_rec = p_r - p_c;
  const Vec2 e_r = q.behavior.recovery - (p_r + shift + e_c);

  double total = w.pose * pose + w.velo * velo + w.contact * contact;
  total += w.react_velo * ratio_cost(d_react, d_react + e_c) + w.react_dir * cos_cost(d_react, d_react + e_c);
  total += w.recover_velo * ratio_cost(d_rec, d_rec + e_r) + w.recover_dir * cos_cost(d_rec, d_rec + e_r);
  total += w.shot_velo * std::abs(*c.v_b - q.behavior.velocity);
  total += w.shot_place * (*c.x_b + shift + e_c - q.behavior.placement).norm();
  const bool feasible = e_c.norm() <= th.max_react_correction &&
                        ratio_cost(d_react, d_react + e_c) + cos_cost(d_react, d_react + e_c) <= th.max_react_cost;
  return {total, feasible};
}

inline std::optional<std::size_t> reference_search(const ClipDatabase& db, const std::string& player, const SearchQuery& q) {
  std::optional<std::size_t> best;
  double best_total = INFINITY;
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto& c = db.clip(i);
    if (c.player_id != player) continue;
    if (q.filter == OutcomeFilter::MustContinue && c.outcome != ShotOutcome::InPlay) continue;
    if (q.filter == OutcomeFilter::MustEndNoContact && c.outcome != ShotOutcome::NoContact) continue;
    if (q.filter == OutcomeFilter::ContactAny && !c.has_contact()) continue;
    const Ref r = reference_cost(c, q, {}, {});
    if (!r.feasible || !std::isfinite(r.total)) continue;
    if (!best || r.total < best_total || (r.total == best_total && c.id < db.clip(*best).id)) {
      best = i;
      best_total = r.total;
    }
  }
  return best;
}

inline SearchQuery random_query(const ClipDatabase& db, Rng& rng, std::vector<BallTrajectory>& balls) {
  const auto& src = db.clip(db.by_player("alpha")[rng.index(db.by_player("alpha").size())]);
  const Vec3 origin(rng.uniform(-3.5, 3.5), rng.uniform(-13.0, -11.0), rng.uniform(0.6, 1.2));
  const Vec2 aim(rng.uniform(-3.5, 3.5), rng.uniform(7.0, 11.0));
  balls.push_back(incoming_ball(origin, Vec2(aim - origin.head<2>()), rng.uniform(20.0, 32.0), rng.uniform(2.0, 5.0),
                                -rng.uniform(0.0, 15.0)));
  SearchQuery q;
  const std::array<ShotType, 4> types = {ShotType::ForehandTopspin, ShotType::BackhandTopspin,
                                         ShotType::ForehandUnderspin, ShotType::BackhandUnderspin};
  q.behavior.shot = types[rng.index(types.size())];
  q.behavior.velocity = rng.uniform(14.0, 26.0);
  q.behavior.placement = Vec2(rng.uniform(-4.0, 4.0), rng.uniform(-11.5, -5.0));
  q.behavior.recovery = Vec2(rng.uniform(-1.5, 1.5), rng.uniform(12.0, 13.5));
  q.start_pos = Vec2(rng.uniform(-2.0, 2.0), rng.uniform(11.5, 13.0));
  q.start_pose = src.pose_trace.front();
  q.start_velocity = Vec2(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0));
  return q;
}

}  // namespace search_oracle
