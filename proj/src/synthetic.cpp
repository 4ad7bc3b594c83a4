#include "rallyforge/synthetic.hpp"

#include "rallyforge/errors.hpp"
#include "rallyforge/random.hpp"
#include "rallyforge/serialize.hpp"
#include "rallyforge/shot_direction.hpp"
#include "rallyforge/trajectory_fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

namespace rallyforge {

void ArchetypeSpec::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (player_id.empty()) throw std::invalid_argument("archetype: empty player id");
  if (!prob(cross_court_bias) || !prob(down_line_bias) || !prob(net_approach_rate) || !prob(error_rate) ||
      !prob(slice_rate))
    throw std::invalid_argument("archetype " + player_id + ": probabilities must lie in [0, 1]");
  if (cross_court_bias + down_line_bias > 1.0 + 1e-12)
    throw std::invalid_argument("archetype " + player_id + ": cross_court_bias + down_line_bias exceeds 1");
  if (!(baseline_depth_std >= 0.0)) throw std::invalid_argument("archetype " + player_id + ": negative std");
  for (const auto& s : shot_speed)
    if (!(s.mean > 0.0) || !(s.std >= 0.0))
      throw std::invalid_argument("archetype " + player_id + ": bad shot speed");
  if (!(max_run_speed > 0.0)) throw std::invalid_argument("archetype " + player_id + ": max_run_speed must be > 0");
}

namespace {

// Keyframed ground path; consecutive keys are joined with smoothstep easing.
struct Path {
  std::vector<std::pair<double, Vec2>> keys;

  Vec2 at(double t) const {
    if (t <= keys.front().first) return keys.front().second;
    for (std::size_t i = 1; i < keys.size(); ++i) {
      if (t <= keys[i].first) {
        const auto& [t0, p0] = keys[i - 1];
        const auto& [t1, p1] = keys[i];
        const double u = t1 > t0 ? (t - t0) / (t1 - t0) : 1.0;
        return p0 + smoothstep(u) * (p1 - p0);
      }
    }
    return keys.back().second;
  }
  // Abandons any motion planned after t, holding the position reached at t.
  void cut(double t) {
    const Vec2 p = at(t);
    while (!keys.empty() && keys.back().first >= t) keys.pop_back();
    keys.emplace_back(t, p);
  }
  void move_to(double t, const Vec2& p) {
    if (t <= keys.back().first) throw std::logic_error("keyframes out of order");
    keys.emplace_back(t, p);
  }
};

struct Cycle {
  int player = 0;  // 0 or 1 within the pairing
  double start = 0.0, end = 0.0;
  std::optional<double> contact;
  ShotType shot = ShotType::Serve;
  ShotOutcome outcome = ShotOutcome::InPlay;
  Vec3 x_c = Vec3::Zero();
  std::optional<Vec2> x_b;
  double bounce_time = 0.0;
  double v_b = 0.0;
  std::optional<Vec3> incoming_start;
  std::optional<Vec2> incoming_bounce;
};

struct Player {
  const ArchetypeSpec* spec = nullptr;
  Side side = Side::Near;
  Path path;
  bool at_net = false;
};

// --- poses -------------------------------------------------------------------
// Joint order: head, neck, r shoulder, r elbow, r wrist, l shoulder, l elbow,
// l wrist, r hip, r knee, r ankle, l hip, l knee, l ankle. Right-handed frame:
// +x toward the racket side, +y up, neck at the origin, unit torso.

Pose make_pose(std::initializer_list<double> xy) {
  Pose p;
  auto it = xy.begin();
  for (int k = 0; k < kKeypoints; ++k) {
    p(k, 0) = *it++;
    p(k, 1) = *it++;
  }
  return p;
}

const Pose kReady = make_pose({0, 0.35, 0, 0, 0.25, -0.05, 0.35, -0.35, 0.3, -0.6, -0.25, -0.05, -0.35, -0.35,
                               -0.3, -0.6, 0.15, -1.0, 0.2, -1.5, 0.22, -2.0, -0.15, -1.0, -0.2, -1.5, -0.22, -2.0});

Pose with_arms(const Pose& base, const Vec2& r_elbow, const Vec2& r_wrist, const Vec2& l_elbow, const Vec2& l_wrist) {
  Pose p = base;
  p.row(3) = r_elbow.transpose();
  p.row(4) = r_wrist.transpose();
  p.row(6) = l_elbow.transpose();
  p.row(7) = l_wrist.transpose();
  return p;
}

struct StrokePoses {
  Pose back, contact, follow;
};

StrokePoses stroke_poses(ShotType shot) {
  const Pose& R = kReady;
  switch (shot) {
    case ShotType::Serve:
      return {with_arms(R, {0.45, 0.2}, {0.3, 0.55}, {-0.2, 0.3}, {-0.1, 0.8}),
              with_arms(R, {0.25, 0.45}, {0.2, 0.9}, {-0.3, -0.3}, {-0.2, -0.5}),
              with_arms(R, {-0.1, -0.3}, {-0.45, -0.6}, {-0.35, -0.35}, {-0.3, -0.6})};
    case ShotType::ForehandTopspin:
      return {with_arms(R, {0.55, -0.1}, {0.85, -0.35}, {0.1, -0.25}, {0.25, -0.35}),
              with_arms(R, {0.5, -0.25}, {0.85, -0.45}, {-0.3, -0.3}, {-0.35, -0.5}),
              with_arms(R, {-0.05, 0.1}, {-0.35, 0.25}, {-0.35, -0.3}, {-0.3, -0.55})};
    case ShotType::ForehandUnderspin:
      return {with_arms(R, {0.5, 0.1}, {0.75, 0.25}, {0.1, -0.25}, {0.25, -0.35}),
              with_arms(R, {0.45, -0.3}, {0.8, -0.55}, {-0.3, -0.3}, {-0.35, -0.5}),
              with_arms(R, {0.1, -0.45}, {-0.2, -0.7}, {-0.35, -0.3}, {-0.3, -0.55})};
    case ShotType::BackhandTopspin:
      return {with_arms(R, {-0.3, -0.1}, {-0.75, -0.35}, {-0.4, -0.2}, {-0.7, -0.4}),
              with_arms(R, {-0.35, -0.3}, {-0.8, -0.45}, {-0.45, -0.3}, {-0.75, -0.45}),
              with_arms(R, {0.35, 0.1}, {0.55, 0.3}, {0.1, 0.05}, {0.45, 0.3})};
    case ShotType::BackhandUnderspin:
      return {with_arms(R, {-0.3, 0.1}, {-0.6, 0.35}, {-0.3, -0.1}, {-0.5, 0.0}),
              with_arms(R, {-0.3, -0.35}, {-0.75, -0.55}, {-0.45, -0.3}, {-0.6, -0.55}),
              with_arms(R, {0.4, -0.25}, {0.75, -0.45}, {-0.45, -0.25}, {-0.75, -0.3})};
    case ShotType::ForehandVolley:
      return {with_arms(R, {0.45, -0.05}, {0.6, 0.1}, {-0.1, -0.2}, {0.05, -0.3}),
              with_arms(R, {0.45, -0.15}, {0.75, -0.1}, {-0.3, -0.3}, {-0.3, -0.5}),
              with_arms(R, {0.35, -0.25}, {0.5, -0.35}, {-0.3, -0.3}, {-0.3, -0.55})};
    case ShotType::BackhandVolley:
      return {with_arms(R, {-0.3, -0.05}, {-0.55, 0.1}, {-0.3, -0.2}, {-0.45, -0.1}),
              with_arms(R, {-0.35, -0.15}, {-0.75, -0.1}, {-0.35, -0.3}, {-0.35, -0.55}),
              with_arms(R, {-0.2, -0.25}, {-0.45, -0.35}, {-0.35, -0.3}, {-0.3, -0.55})};
  }
  return {R, R, R};
}

Pose blend(const Pose& a, const Pose& b, double u) { return a + smoothstep(u) * (b - a); }

Pose synth_pose(std::optional<ShotType> shot, std::optional<double> t_c, double t, double ground_speed,
                Handedness hand) {
  Pose p = kReady;
  if (shot && t_c) {
    const StrokePoses s = stroke_poses(*shot);
    const double u = t - *t_c;
    if (u < -0.6) p = kReady;
    else if (u < -0.3) p = blend(kReady, s.back, (u + 0.6) / 0.3);
    else if (u < 0.0) p = blend(s.back, s.contact, (u + 0.3) / 0.3);
    else if (u < 0.3) p = blend(s.contact, s.follow, u / 0.3);
    else p = blend(s.follow, kReady, (u - 0.3) / 0.5);
  }
  // Running stride.
  const double amp = 0.12 * std::min(ground_speed / 5.0, 1.0);
  const double swing = amp * std::sin(2.0 * M_PI * t / 0.45);
  p(9, 0) += swing;
  p(10, 0) += 1.5 * swing;
  p(12, 0) -= swing;
  p(13, 0) -= 1.5 * swing;
  if (hand == Handedness::Left) p.col(0) *= -1.0;
  return p;
}

// --- point script ------------------------------------------------------------

class PointScript {
 public:
  PointScript(const ArchetypeSpec& a, const ArchetypeSpec& b, bool a_serves, int point, std::uint64_t seed,
              const SyntheticOptions& opt)
      : opt_(opt), court_(opt.court), rng_({seed, static_cast<std::uint64_t>(point)}) {
    players_[0].spec = &a;
    players_[1].spec = &b;
    server_ = a_serves ? 0 : 1;
    const Side server_side = rng_.bernoulli(0.5) ? Side::Near : Side::Far;
    players_[server_].side = server_side;
    players_[1 - server_].side = server_side == Side::Near ? Side::Far : Side::Near;
    service_court_ = rng_.bernoulli(0.5) ? ServiceCourt::Deuce : ServiceCourt::Ad;
  }

  std::vector<Cycle> run();
  const Path& path(int i) const { return players_[i].path; }
  const ArchetypeSpec& spec(int i) const { return *players_[i].spec; }

 private:
  struct Flight {
    int hitter = 0;
    double t_hit = 0.0;
    Vec3 contact;
    BallTrajectory traj;
  };

  PlacementFit fit_shot(const Vec3& contact, ShotType shot, const std::function<Vec2()>& draw_placement,
                        const ShotSpeed& speed, const std::function<bool(const Vec2&)>& accept);
  Vec2 recovery_target(Player& p, const Vec2& placement, bool volley);
  double lateral_sign_of(ServiceCourt c, Side side) const {
    // The deuce court is on the player's right: -x for the near side.
    return (c == ServiceCourt::Deuce ? -1.0 : 1.0) * side_sign(side);
  }

  const SyntheticOptions& opt_;
  const CourtSpec& court_;
  Rng rng_;
  std::array<Player, 2> players_;
  int server_ = 0;
  ServiceCourt service_court_ = ServiceCourt::Deuce;
};

PlacementFit PointScript::fit_shot(const Vec3& contact, ShotType shot, const std::function<Vec2()>& draw_placement,
                                   const ShotSpeed& speed, const std::function<bool(const Vec2&)>& accept) {
  for (int attempt = 0; attempt < opt_.max_fit_attempts; ++attempt) {
    const Vec2 target = draw_placement();
    const double v = std::clamp(rng_.normal(speed.mean, speed.std), 8.0, 45.0) * std::pow(0.93, attempt / 2);
    try {
      PlacementFit fit = fit_to_placement(contact, target, v, shot, opt_.params, court_);
      const auto bounce = fit.trajectory.bounce_pos();
      if (bounce && accept(Vec2(bounce->head<2>())) && fit.trajectory.bounces.size() >= 1) return fit;
    } catch (const NoFeasibleTrajectory&) {
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "no feasible %s from (%.2f, %.2f, %.2f) after %d attempts",
                std::string(to_string(shot)).c_str(), contact.x(), contact.y(), contact.z(), opt_.max_fit_attempts);
  throw GenerationError(buf);
}

Vec2 PointScript::recovery_target(Player& p, const Vec2& placement, bool volley) {
  const double s = side_sign(p.side);
  if (!p.at_net && !volley && rng_.bernoulli(p.spec->net_approach_rate)) p.at_net = true;
  if (p.at_net) return {0.35 * placement.x(), s * rng_.uniform(2.5, 4.0)};
  const double behind = std::max(-1.0, rng_.normal(p.spec->baseline_depth_mean, p.spec->baseline_depth_std));
  return {0.25 * placement.x() + rng_.normal(0.0, 0.3), s * (court_.half_length() + behind)};
}

std::vector<Cycle> PointScript::run() {
  std::vector<Cycle> cycles;
  const double L = court_.half_length();
  const double half_w = court_.half_singles();

  // Serve.
  Player& srv = players_[server_];
  Player& rcv = players_[1 - server_];
  const double ss = side_sign(srv.side), rs = side_sign(rcv.side);
  const Vec2 serve_pos(lateral_sign_of(service_court_, srv.side) * rng_.uniform(0.3, 1.0),
                       ss * (L + rng_.uniform(0.05, 0.3)));
  const double box_sign = lateral_sign_of(service_court_, rcv.side);
  const Vec2 receive_pos(box_sign * rng_.uniform(1.0, 2.5), rs * (L + rng_.uniform(0.3, 1.5)));
  srv.path.keys = {{0.0, serve_pos}};
  rcv.path.keys = {{0.0, receive_pos}};

  const double t_serve = rng_.uniform(0.9, 1.2);
  const Vec3 serve_contact(serve_pos.x() + 0.25 * racket_side_sign(srv.side, srv.spec->handedness),
                           serve_pos.y() - ss * 0.4, 2.8 + rng_.normal(0.0, 0.05));
  const PlacementFit serve = fit_shot(
      serve_contact, ShotType::Serve,
      [&] {
        return Vec2(box_sign * rng_.uniform(0.4, half_w - 0.4),
                    rs * rng_.uniform(4.0, court_.service_line_dist - 0.4));
      },
      srv.spec->shot_speed[static_cast<int>(ShotType::Serve)],
      [&](const Vec2& b) { return in_service_box(b, rcv.side, service_court_, court_); });

  Cycle c0;
  c0.player = server_;
  c0.start = 0.0;
  c0.contact = t_serve;
  c0.shot = ShotType::Serve;
  c0.x_c = serve_contact;
  c0.x_b = Vec2(serve.trajectory.bounce_pos()->head<2>());
  c0.bounce_time = t_serve + *serve.trajectory.bounce_time();
  c0.v_b = serve.ground_speed;
  cycles.push_back(c0);
  srv.path.move_to(t_serve, serve_pos);
  {
    const Vec2 target = recovery_target(srv, *c0.x_b, false);
    srv.path.move_to(t_serve + std::max(0.8, (target - serve_pos).norm() / 4.0), target);
  }

  Flight flight{server_, t_serve, serve_contact, serve.trajectory};
  int shots = 1;

  while (true) {
    const int ri = 1 - flight.hitter;
    Player& h = players_[flight.hitter];
    Player& r = players_[ri];
    const ArchetypeSpec& rspec = *r.spec;
    const double sr = side_sign(r.side);
    const BallTrajectory& traj = flight.traj;
    const double t_hit = flight.t_hit;
    const BounceEvent& bounce = traj.bounces.front();
    const double b = std::abs(bounce.p.y());

    Cycle cyc;
    cyc.player = ri;
    cyc.start = t_hit;
    cyc.incoming_start = flight.contact;
    cyc.incoming_bounce = Vec2(bounce.p.head<2>());

    // Where the receiver meets the ball.
    std::optional<Intercept> ic;
    bool volley = false;
    if (r.at_net) {
      try {
        ic = intercept(traj, r.path.at(t_hit).y());
        volley = ic->t < bounce.t;
      } catch (const NoIntersection&) {
      }
    }
    if (!ic) {
      const double home = std::abs(r.path.keys.back().second.y());
      for (double plane : {std::max(b + 1.5, std::min(home, b + 4.5)), b + 0.8}) {
        try {
          Intercept c = intercept(traj, sr * plane);
          if (c.t > bounce.t) {
            ic = c;
            break;
          }
        } catch (const NoIntersection&) {
        }
      }
    }

    const double run_start = t_hit + opt_.reaction_delay;
    const Vec2 r0 = r.path.at(run_start);
    bool reached = false;
    ShotType shot = ShotType::ForehandTopspin;
    Vec2 player_at_contact = r0;
    if (ic) {
      const double racket = racket_side_sign(r.side, rspec.handedness);
      const bool forehand = (ic->p.x() - r0.x()) * racket >= -0.2;
      if (volley) shot = forehand ? ShotType::ForehandVolley : ShotType::BackhandVolley;
      else {
        const bool slice = rng_.bernoulli(rspec.slice_rate);
        shot = forehand ? (slice ? ShotType::ForehandUnderspin : ShotType::ForehandTopspin)
                        : (slice ? ShotType::BackhandUnderspin : ShotType::BackhandTopspin);
      }
      const double reach = ContactHeuristic{}.reach;
      player_at_contact = Vec2(ic->p.x() - (forehand ? racket : -racket) * reach, ic->p.y());
      const double avail = t_hit + ic->t - run_start;
      reached = avail > 0.05 && (player_at_contact - r0).norm() / avail <= rspec.max_run_speed;
    }

    if (!reached) {
      // The receiver chases but never gets there; the hitter's shot is a winner.
      const double t_pass = t_hit + (ic ? ic->t : traj.end_time);
      const Vec2 goal = ic ? player_at_contact : Vec2(traj.end_pos.head<2>());
      const Vec2 dir = goal - r0;
      const double run = std::min(dir.norm(), rspec.max_run_speed * std::max(t_pass - run_start, 0.0));
      r.path.cut(run_start);
      if (t_pass > run_start + 1e-3 && dir.norm() > 1e-9)
        r.path.move_to(t_pass, r0 + dir.normalized() * run);
      cyc.outcome = ShotOutcome::NoContact;
      cyc.end = t_pass + 0.3;
      cycles.push_back(cyc);
      for (auto it = cycles.rbegin(); it != cycles.rend(); ++it) {
        if (it->player == flight.hitter) {
          it->outcome = ShotOutcome::Winner;
          it->end = std::max(*it->contact + 0.8, cyc.end);
          break;
        }
      }
      break;
    }

    // Contact.
    const double t_contact = t_hit + ic->t;
    r.path.cut(run_start);
    r.path.move_to(t_contact, player_at_contact);
    for (auto it = cycles.rbegin(); it != cycles.rend(); ++it) {
      if (it->player == flight.hitter) {
        it->end = t_contact;
        break;
      }
    }

    const bool error = rng_.bernoulli(rspec.error_rate);
    const double u = rng_.uniform();
    // No direction: aimed through the middle, classified by where it lands.
    std::optional<ShotDirection> direction;
    if (u < rspec.cross_court_bias) direction = ShotDirection::CrossCourt;
    else if (u < rspec.cross_court_bias + rspec.down_line_bias) direction = ShotDirection::DownTheLine;
    const Vec2 contact_xy = ic->p.head<2>();
    const double hs = hitting_side_sign(contact_xy, shot, rspec.handedness, court_);
    const double target_side = -sr;
    const Side opp_side = h.side;
    auto draw = [&]() -> Vec2 {
      double x = 0.0;
      if (!direction) x = rng_.uniform(-0.8, 0.8);
      else x = (*direction == ShotDirection::CrossCourt ? -hs : hs) * rng_.uniform(2.0, 3.6);
      double depth = volley ? rng_.uniform(5.5, 10.0) : rng_.uniform(7.5, 11.0);
      if (error) {
        if (!direction || rng_.bernoulli(0.5)) depth = L + rng_.uniform(0.3, 1.5);
        else x = (x > 0.0 ? 1.0 : -1.0) * (half_w + rng_.uniform(0.3, 1.2));
      }
      return {x, target_side * depth};
    };
    auto accept = [&](const Vec2& p) {
      const bool in = in_singles_half(p, opp_side, court_);
      if (error ? in_singles_court(p, court_) || side_of(p.y()) != opp_side : !in) return false;
      return !direction || shot_direction(contact_xy, shot, rspec.handedness, p, court_) == *direction;
    };
    const PlacementFit out = fit_shot(ic->p, shot, draw, rspec.shot_speed[static_cast<int>(shot)], accept);
    ++shots;

    cyc.contact = t_contact;
    cyc.shot = shot;
    cyc.x_c = ic->p;
    cyc.x_b = Vec2(out.trajectory.bounce_pos()->head<2>());
    cyc.bounce_time = t_contact + *out.trajectory.bounce_time();
    cyc.v_b = out.ground_speed;

    if (error) {
      cyc.outcome = ShotOutcome::Error;
      cyc.end = t_contact + 1.0;
      r.path.move_to(cyc.end, player_at_contact);
      cycles.push_back(cyc);
      break;
    }
    const Vec2 target = recovery_target(r, *cyc.x_b, volley);
    r.path.move_to(t_contact + std::max(0.8, (target - player_at_contact).norm() / 4.0), target);
    if (shots >= opt_.max_shots) {
      cyc.end = t_contact + 1.0;
      cycles.push_back(cyc);
      break;
    }
    cycles.push_back(cyc);
    flight = Flight{ri, t_contact, ic->p, out.trajectory};
  }
  return cycles;
}

ShotCycleClip make_clip(const Cycle& c, const PointScript& script, int point, int shot_index, double dt) {
  const ArchetypeSpec& me = script.spec(c.player);
  const ArchetypeSpec& other = script.spec(1 - c.player);
  const Path& mine = script.path(c.player);
  const Path& theirs = script.path(1 - c.player);

  ShotCycleClip clip;
  char id[64];
  std::snprintf(id, sizeof id, "p%05d-s%03d", point, shot_index);
  clip.id = id;
  clip.player_id = me.player_id;
  clip.opponent_id = other.player_id;
  clip.handedness = me.handedness;
  clip.t_r = c.end - c.start;
  clip.outcome = c.outcome;
  clip.trace_dt = dt;
  if (c.outcome != ShotOutcome::NoContact) {
    clip.t_c = *c.contact - c.start;
    clip.shot_type = c.shot;
    clip.x_c = c.x_c;
    clip.x_b = c.x_b;
    clip.t_b = c.bounce_time - c.start;
    clip.v_b = c.v_b;
  }
  clip.incoming_start = c.incoming_start;
  clip.incoming_bounce = c.incoming_bounce;

  const std::size_t n = trace_length(clip.t_r, dt);
  for (std::size_t k = 0; k < n; ++k) {
    const double tl = static_cast<double>(k) * dt;
    const double tg = c.start + tl;
    clip.player_trace.push_back(mine.at(tg));
    clip.opponent_trace.push_back(theirs.at(tg));
    const double speed = (mine.at(tg + 0.5 * dt) - mine.at(tg - 0.5 * dt)).norm() / dt;
    clip.pose_trace.push_back(synth_pose(clip.shot_type, clip.t_c, tl, speed, me.handedness));
  }
  return clip;
}

}  // namespace

ClipDatabase generate_synthetic_db(const std::vector<ArchetypeSpec>& players, int n_points, std::uint64_t seed,
                                   const SyntheticOptions& options) {
  if (players.size() < 2) throw std::invalid_argument("synthetic database needs at least two archetypes");
  if (n_points < 1) throw std::invalid_argument("synthetic database needs at least one point");
  for (const auto& p : players) p.validate();
  options.court.validate();
  options.params.validate();

  std::vector<std::pair<int, int>> pairings;
  for (int i = 0; i < static_cast<int>(players.size()); ++i)
    for (int j = i + 1; j < static_cast<int>(players.size()); ++j) pairings.emplace_back(i, j);

  ClipDatabase db(options.court, options.params);
  for (int point = 0; point < n_points; ++point) {
    const auto [a, b] = pairings[point % pairings.size()];
    const bool a_serves = (point / pairings.size()) % 2 == 0;
    PointScript script(players[a], players[b], a_serves, point, seed, options);
    const std::vector<Cycle> cycles = script.run();
    for (std::size_t s = 0; s < cycles.size(); ++s) {
      try {
        db.add(make_clip(cycles[s], script, point, static_cast<int>(s), kTraceDt));
      } catch (const ValidationError& e) {
        throw GenerationError(std::string("generated clip failed validation: ") + e.what());
      }
    }
  }
  return db;
}

nlohmann::json to_json(const ArchetypeSpec& a) {
  nlohmann::json speeds = nlohmann::json::object();
  for (ShotType t : kAllShotTypes) {
    const ShotSpeed& v = a.shot_speed[static_cast<int>(t)];
    speeds[std::string(to_string(t))] = {{"mean", v.mean}, {"std", v.std}};
  }
  return {{"player_id", a.player_id},
          {"handedness", std::string(to_string(a.handedness))},
          {"cross_court_bias", a.cross_court_bias},
          {"down_line_bias", a.down_line_bias},
          {"net_approach_rate", a.net_approach_rate},
          {"baseline_depth_mean", a.baseline_depth_mean},
          {"baseline_depth_std", a.baseline_depth_std},
          {"shot_speed", speeds},
          {"error_rate", a.error_rate},
          {"slice_rate", a.slice_rate},
          {"max_run_speed", a.max_run_speed}};
}

ArchetypeSpec archetype_from_json(const nlohmann::json& j) {
  ArchetypeSpec a;
  try {
    io::ObjectReader r(j, "archetype");
    std::string hand = std::string(to_string(a.handedness));
    r.required("player_id", a.player_id)
        .optional("handedness", hand)
        .optional("cross_court_bias", a.cross_court_bias)
        .optional("down_line_bias", a.down_line_bias)
        .optional("net_approach_rate", a.net_approach_rate)
        .optional("baseline_depth_mean", a.baseline_depth_mean)
        .optional("baseline_depth_std", a.baseline_depth_std)
        .optional("error_rate", a.error_rate)
        .optional("slice_rate", a.slice_rate)
        .optional("max_run_speed", a.max_run_speed);
    const auto h = handedness_from_string(hand);
    if (!h) throw io::SchemaError("archetype.handedness: expected right or left");
    a.handedness = *h;
    if (const nlohmann::json* speeds = r.child("shot_speed")) {
      if (!speeds->is_object()) throw io::SchemaError("archetype.shot_speed: expected an object");
      for (auto it = speeds->begin(); it != speeds->end(); ++it) {
        const auto t = shot_type_from_string(it.key());
        if (!t) throw io::SchemaError("archetype.shot_speed: unknown shot type '" + it.key() + "'");
        ShotSpeed& v = a.shot_speed[static_cast<int>(*t)];
        io::ObjectReader sr(it.value(), "archetype.shot_speed." + it.key());
        sr.optional("mean", v.mean).optional("std", v.std);
        sr.finish();
      }
    }
    r.finish();
    a.validate();
  } catch (const io::SchemaError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return a;
}

std::vector<ArchetypeSpec> load_archetypes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open archetype file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_array()) throw ConfigError(path + ": expected an array of archetypes");
  std::vector<ArchetypeSpec> out;
  for (const auto& a : j) out.push_back(archetype_from_json(a));
  return out;
}

}  // namespace rallyforge
