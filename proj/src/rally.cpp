#include "rallyforge/rally.hpp"

#include "rallyforge/errors.hpp"
#include "rallyforge/serialize.hpp"
#include "rallyforge/shot_direction.hpp"

#include <cmath>
#include <sstream>

namespace rallyforge {

using io::json;
using io::vec_json;

std::string_view to_string(RallyPhase p) {
  switch (p) {
    case RallyPhase::Serving: return "serving";
    case RallyPhase::InRally: return "in_rally";
    case RallyPhase::Ended: return "ended";
  }
  return "?";
}

std::string_view to_string(EndReason r) {
  switch (r) {
    case EndReason::None: return "none";
    case EndReason::Error: return "error";
    case EndReason::Unreachable: return "unreachable";
    case EndReason::Truncated: return "truncated";
  }
  return "?";
}

void RallyConfig::validate() const {
  if (max_shots < 1) throw std::invalid_argument("rally: max_shots must be >= 1");
  weights.validate();
  thresholds.validate();
  bins.validate();
  if (!(placement_fit.position_tolerance > 0.0) || !(placement_fit.speed_tolerance > 0.0))
    throw std::invalid_argument("rally: placement fit tolerances must be > 0");
}

namespace {

// Lowest launch height accepted for a return; the ball can be almost on the ground.
constexpr double kMinLaunchHeight = 0.05;

ShotCycleClip reflect_lateral(ShotCycleClip c) {
  auto flip = [](auto& v) { v.x() = -v.x(); };
  if (c.x_c) flip(*c.x_c);
  if (c.x_b) flip(*c.x_b);
  for (auto& p : c.player_trace) flip(p);
  for (auto& p : c.opponent_trace) flip(p);
  return c;
}

json trajectory_summary(const BallTrajectory& t, int frame) {
  json j;
  const LaunchState& l = t.launch;
  j["v_h"] = l.v_h;
  j["v_z"] = l.v_z;
  j["spin"] = l.signed_spin();
  j["origin"] = vec_json(to_player_frame(l.origin, frame));
  if (auto b = t.bounce_pos()) j["bounce"] = vec_json(Vec2(to_player_frame(Vec2(b->head<2>()), frame)));
  if (auto bt = t.bounce_time()) j["bounce_time"] = *bt;
  if (t.net_clearance) j["net_clearance"] = *t.net_clearance;
  j["ground_speed"] = ground_speed(t);
  j["end_time"] = t.end_time;
  return j;
}

json cost_json(const ClipCostBreakdown& c) {
  return {{"pose", c.pose},           {"velo", c.velo},
          {"contact", c.contact},     {"react_velo", c.react_velo},
          {"react_dir", c.react_dir}, {"recover_velo", c.recover_velo},
          {"recover_dir", c.recover_dir}, {"shot_velo", c.shot_velo},
          {"shot_place", c.shot_place},   {"total", c.total}};
}

}  // namespace

Rally::Rally(const ClipDatabase& db, std::array<const BehaviorModel*, 2> models, std::array<std::string, 2> players,
             int server, int point, std::uint64_t seed, const RallyConfig& config)
    : db_(db),
      models_(models),
      config_(config),
      seed_(seed),
      rng_{Rng{seed, static_cast<std::uint64_t>(point), 0}, Rng{seed, static_cast<std::uint64_t>(point), 1}} {
  config_.validate();
  if (server != 0 && server != 1) throw std::invalid_argument("server must be 0 or 1");
  if (players[0] == players[1]) throw std::invalid_argument("a player cannot play itself");
  state_.point = point;
  state_.server = server;
  state_.responder = 1 - server;
  state_.service_court = point % 2 == 0 ? ServiceCourt::Deuce : ServiceCourt::Ad;
  for (int i = 0; i < 2; ++i) {
    if (!models_[i]) throw std::invalid_argument("missing behavior model for '" + players[i] + "'");
    const auto& mine = db.by_player(players[i]);
    if (mine.empty()) throw InsufficientData("no clips for player '" + players[i] + "'");
    PlayerState& p = state_.players[i];
    p.id = players[i];
    p.hand = *db.handedness(players[i]);
    p.rest_pose = db.clip(mine.front()).pose_trace.front();
    p.rest_position = to_player_frame(Vec2(0.0, db.court().half_length() + 0.5), i);
    p.recovery_target = p.rest_position;
  }
}

Vec2 Rally::player_position(int i, double t) const {
  const PlayerState& p = state_.players[i];
  if (!p.clip) return p.rest_position;
  return to_player_frame(corrected_position(*p.clip, p.plan, t - p.clip_start), i);
}

Vec2 Rally::player_velocity(int i, double t) const {
  const PlayerState& p = state_.players[i];
  if (!p.clip) return Vec2::Zero();
  const double dt = p.clip->trace_dt;
  return (player_position(i, t + dt) - player_position(i, t)) / dt;
}

Pose Rally::player_pose(int i, double t) const {
  const PlayerState& p = state_.players[i];
  if (!p.clip) return p.rest_pose;
  return p.clip->pose_at(t - p.clip_start);
}

void Rally::queue_override(const ControlOverride& o) {
  if (o.player != 0 && o.player != 1) throw std::invalid_argument("override: player must be 0 or 1");
  for (const auto* v : {o.placement ? &*o.placement : nullptr, o.recovery ? &*o.recovery : nullptr})
    if (v && !v->allFinite()) throw std::invalid_argument("override: positions must be finite");
  if (o.shot == ShotType::Serve) throw std::invalid_argument("override: serve is not a response shot");
  pending_[o.player] = o;
}

void Rally::start() {
  if (state_.phase != RallyPhase::Serving) throw std::logic_error("point already started");
  const CourtSpec& court = db_.court();
  const int s = state_.server;
  PlayerState& server = state_.players[s];
  const auto& serves = db_.by_player_shot(server.id, ShotType::Serve);
  if (serves.empty()) throw NoServeClips("player '" + server.id + "' has no serve clips");

  auto in_box = [&](const Vec2& x_b) { return in_service_box(x_b, Side::Far, state_.service_court, court); };
  std::vector<std::size_t> pool;
  for (std::size_t i : serves)
    if (in_box(*db_.clip(i).x_b)) pool.push_back(i);
  bool reflected = false;
  if (pool.empty()) {
    for (std::size_t i : serves)
      if (in_box(Vec2(-db_.clip(i).x_b->x(), db_.clip(i).x_b->y()))) pool.push_back(i);
    reflected = true;
  }
  if (pool.empty()) throw NoServeClips("player '" + server.id + "' has no serve into the required box");

  ShotCycleClip clip = db_.clip(pool[rng_[s].index(pool.size())]);
  if (reflected) clip = reflect_lateral(std::move(clip));
  const double t_c = *clip.t_c;

  server.plan = CorrectionPlan{};
  server.plan.t_c = t_c;
  server.plan.recovery_end = clip.t_r;
  server.plan.contact = *clip.x_c;
  server.clip_start = 0.0;
  server.recovery_target = to_player_frame(clip.recovery_position(), s);
  PlayerState& receiver = state_.players[1 - s];
  receiver.rest_position = to_player_frame(clip.opponent_at(t_c), s);
  receiver.recovery_target = receiver.rest_position;

  json ev = {{"event", "serve"},
             {"point", state_.point},
             {"player", server.id},
             {"seed", seed_},
             {"clip", clip.id},
             {"service_court", state_.service_court == ServiceCourt::Deuce ? "deuce" : "ad"},
             {"reflected", reflected},
             {"contact_time", t_c},
             {"contact", vec_json(to_player_frame(*clip.x_c, s))},
             {"placement", vec_json(to_player_frame(*clip.x_b, s))},
             {"velocity", *clip.v_b}};
  server.clip = std::move(clip);
  state_.ball_start = t_c;
  state_.phase = RallyPhase::InRally;

  const ShotCycleClip& c = *server.clip;
  try {
    PlacementFit pf = fit_to_placement(*c.x_c, *c.x_b, *c.v_b, ShotType::Serve, db_.params(), court,
                                       config_.placement_fit);
    state_.ball = s == 0 ? std::move(pf.trajectory) : pf.trajectory.mirrored();
    ev["trajectory"] = trajectory_summary(state_.ball, 0);
  } catch (const NoFeasibleTrajectory& e) {
    ev["outcome"] = "error";
    events_.push_back(std::move(ev));
    end(1 - s, EndReason::Error, "serve into the net");
    return;
  }
  const Vec2 bounce = to_player_frame(Vec2(state_.ball.bounce_pos()->head<2>()), s);
  const bool good = in_box(bounce);
  ev["outcome"] = good ? "in_play" : "error";
  events_.push_back(std::move(ev));
  if (!good) end(1 - s, EndReason::Error, "serve out of the box");
}

void Rally::finalize_opponent_recovery(int h, double contact_time) {
  PlayerState& p = state_.players[h];
  if (!p.clip) return;
  finalize_recovery(*p.clip, p.plan, to_player_frame(p.recovery_target, h), contact_time - p.clip_start,
                    config_.thresholds);
}

void Rally::end(int winner, EndReason reason, const std::string& detail) {
  state_.phase = RallyPhase::Ended;
  state_.reason = reason;
  if (winner >= 0) state_.winner = winner;
  json ev = {{"event", "point_end"},
             {"point", state_.point},
             {"reason", std::string(to_string(reason))},
             {"detail", detail},
             {"responses", state_.responses},
             {"winner", winner >= 0 ? json(state_.players[winner].id) : json(nullptr)}};
  events_.push_back(std::move(ev));
}

bool Rally::step() {
  if (state_.phase == RallyPhase::Serving) throw std::logic_error("point not started");
  if (state_.phase == RallyPhase::Ended) return false;

  const CourtSpec& court = db_.court();
  const int r = state_.responder, h = 1 - r;
  PlayerState& me = state_.players[r];
  const double t_h = state_.ball_start;
  const BallTrajectory incoming = r == 0 ? state_.ball : state_.ball.mirrored();

  SearchQuery q;
  q.incoming = &incoming;
  q.start_pos = to_player_frame(player_position(r, t_h), r);
  q.start_velocity = to_player_frame(player_velocity(r, t_h), r);
  q.start_pose = player_pose(r, t_h);
  const Vec2 opp_target = to_player_frame(state_.players[h].recovery_target, r);

  json ev = {{"event", "shot_cycle"},
             {"point", state_.point},
             {"shot", state_.responses + 1},
             {"player", me.id},
             {"side", r},
             {"start_time", t_h},
             {"start", vec_json(to_player_frame(q.start_pos, r))}};

  // Point ends when the responder cannot reach the ball.
  auto unreachable = [&](const std::string& detail) {
    q.filter = OutcomeFilter::MustEndNoContact;
    if (!db_.by_player_outcome(me.id, ShotOutcome::NoContact).empty()) {
      const SearchResult nc = search(db_, me.id, q, config_.weights, config_.thresholds);
      if (nc.clip) {
        me.clip = db_.clip(*nc.clip);
        me.plan = nc.plan;
        me.clip_start = t_h;
        ev["clip"] = me.clip->id;
      }
    }
    ev["outcome"] = "no_contact";
    events_.push_back(std::move(ev));
    end(h, EndReason::Unreachable, detail);
    return false;
  };

  DescriptorEstimate est;
  try {
    est = build_descriptor(incoming, 0.0, q.start_pos, opp_target, court, config_.bins);
  } catch (const NoIntersection&) {
    return unreachable("ball never reaches the player's depth");
  }
  const auto features = est.descriptor.features();
  ev["descriptor"] = {{"features", features}, {"cell", est.descriptor.cell(config_.bins)},
                      {"reach_velocity", est.reach_velocity}, {"contact_estimate", est.contact_time}};

  const BehaviorModel& model = *models_[r];
  Rng& rng = rng_[r];
  const ShotSelection sel = model.sample_shot_selection(est.descriptor, rng);
  BehaviorDecision d{sel.shot, sel.velocity, sel.placement, Vec2::Zero(), false};
  const auto& ov = pending_[r];
  if (ov) {
    if (ov->shot) d.shot = *ov->shot;
    if (ov->placement) d.placement = to_player_frame(*ov->placement, r);
  }
  const RecoveryDecision rec = model.recovery_target(est.descriptor, region_of(d.placement, court).local_index(), rng);
  d.recovery = rec.position;
  d.approach_net = rec.approach_net;
  if (ov && ov->recovery) d.recovery = to_player_frame(*ov->recovery, r);
  ev["relaxation"] = {{"k", sel.relaxation.k()},
                      {"relaxed", sel.relaxation.describe()},
                      {"recovery_k", rec.relaxation.k()},
                      {"recovery_relaxed", rec.relaxation.describe()}};
  ev["decision"] = {{"shot_type", std::string(to_string(d.shot))},
                    {"velocity", d.velocity},
                    {"placement", vec_json(to_player_frame(d.placement, r))},
                    {"recovery", vec_json(to_player_frame(d.recovery, r))},
                    {"approach_net", d.approach_net},
                    {"p_approach", rec.p_approach}};
  if (ov) {
    json o = json::object();
    if (ov->placement) o["placement"] = vec_json(*ov->placement);
    if (ov->recovery) o["recovery"] = vec_json(*ov->recovery);
    if (ov->shot) o["shot_type"] = std::string(to_string(*ov->shot));
    ev["override"] = std::move(o);
    pending_[r].reset();
  }

  // Outcome-filtered search; other stroke types stand in when the chosen one cannot reach.
  const bool aim_in = in_singles_half(d.placement, Side::Far, court);
  q.behavior = d;
  auto try_type = [&](ShotType t) -> std::optional<SearchResult> {
    q.behavior.shot = t;
    std::optional<SearchResult> last;
    std::vector<OutcomeFilter> filters = {OutcomeFilter::ContactAny};
    if (aim_in) filters.insert(filters.begin(), OutcomeFilter::MustContinue);
    for (OutcomeFilter f : filters) {
      q.filter = f;
      try {
        last = search(db_, me.id, q, config_.weights, config_.thresholds);
        if (last->reachable) break;
      } catch (const EmptyCandidateSet&) {
      }
    }
    return last;
  };
  std::optional<SearchResult> found = try_type(d.shot);
  OutcomeFilter used_filter = q.filter;
  if (!found || !found->reachable) {
    std::optional<SearchResult> alt;
    ShotType alt_type = d.shot;
    OutcomeFilter alt_filter = used_filter;
    for (ShotType t : kAllShotTypes) {
      if (t == ShotType::Serve || t == d.shot) continue;
      auto res = try_type(t);
      if (res && res->reachable && (!alt || res->cost.total < alt->cost.total)) {
        alt = std::move(res);
        alt_type = t;
        alt_filter = q.filter;
      }
    }
    if (alt) {
      ev["shot_type_fallback"] = std::string(to_string(alt_type));
      d.shot = alt_type;
      found = std::move(alt);
      used_filter = alt_filter;
    }
  }
  q.behavior = d;
  if (!found || !found->reachable) return unreachable("no clip can reach the ball");

  const ShotCycleClip& chosen = db_.clip(*found->clip);
  const CorrectionPlan& plan = found->plan;
  const double t_c = plan.t_c;
  const double t_contact = t_h + t_c;
  const Vec3 ball_local = incoming.position_at(t_c);
  const Vec2 racket_local = corrected_racket_xy(chosen, plan);

  ev["shot_type"] = std::string(to_string(d.shot));
  ev["direction"] =
      std::string(to_string(shot_direction(ball_local.head<2>(), d.shot, me.hand, d.placement, court)));
  ev["filter"] = std::string(to_string(used_filter));
  ev["clip"] = chosen.id;
  ev["clip_outcome"] = std::string(to_string(chosen.outcome));
  ev["cost"] = cost_json(found->cost);
  ev["corrections"] = {{"offset", vec_json(plan.offset)},
                       {"e_c", vec_json(plan.e_c)},
                       {"z_error", plan.z_error},
                       {"e_r", vec_json(plan.e_r)},
                       {"e_r_raw", vec_json(plan.e_r_raw)}};
  ev["contact_time"] = t_contact;
  ev["ball_at_contact"] = vec_json(to_player_frame(ball_local, r));
  ev["racket_xy"] = vec_json(to_player_frame(racket_local, r));

  // The opponent's recovery now ends at this contact.
  finalize_opponent_recovery(h, t_contact);
  if (const PlayerState& opp = state_.players[h]; opp.clip)
    ev["opponent_recovery_end"] = opp.clip_start + opp.plan.recovery_end;

  me.clip = chosen;
  me.plan = plan;
  me.clip_start = t_h;
  me.recovery_target = to_player_frame(d.recovery, r);
  ++state_.responses;

  Vec3 launch = ball_local;
  launch.z() = std::max(launch.z(), kMinLaunchHeight);
  std::optional<PlacementFit> pf;
  try {
    pf = fit_to_placement(launch, d.placement, d.velocity, d.shot, db_.params(), court, config_.placement_fit);
  } catch (const NoFeasibleTrajectory&) {
  }
  if (!pf) {
    // No net-clearing flight to the placement: the ball finds the net.
    ev["outcome"] = "error";
    ev["error"] = "net";
    state_.ball_start = t_contact;
    events_.push_back(std::move(ev));
    end(h, EndReason::Error, "into the net");
    return false;
  }
  // Ruled on the decided placement; the fitted bounce is within tolerance of it.
  const bool good = aim_in;
  ev["trajectory"] = trajectory_summary(pf->trajectory, r);
  ev["speed_matched"] = pf->speed_matched;
  ev["outcome"] = good ? "in_play" : "error";
  state_.ball = r == 0 ? std::move(pf->trajectory) : pf->trajectory.mirrored();
  state_.ball_start = t_contact;
  events_.push_back(std::move(ev));

  if (!good) {
    end(h, EndReason::Error, "out");
    return false;
  }
  if (state_.responses >= config_.max_shots) {
    end(-1, EndReason::Truncated, "max_shots reached");
    return false;
  }
  state_.responder = h;
  return true;
}

void Rally::run() {
  if (state_.phase == RallyPhase::Serving) start();
  while (step()) {
  }
}

std::string Rally::log_text() const {
  std::ostringstream out;
  for (const auto& e : events_) out << e.dump() << '\n';
  return out.str();
}

}  // namespace rallyforge
