#include "rallyforge/clip_search.hpp"

#include "rallyforge/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace rallyforge {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string_view to_string(OutcomeFilter f) {
  switch (f) {
    case OutcomeFilter::MustContinue: return "must_continue";
    case OutcomeFilter::MustEndNoContact: return "must_end_no_contact";
    case OutcomeFilter::ContactAny: return "contact_any";
  }
  return "?";
}

void CostWeights::validate() const {
  for (double v : {pose, velo, contact, react_velo, react_dir, recover_velo, recover_dir, shot_velo, shot_place})
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("weights: every weight must be finite and >= 0");
}

void SearchThresholds::validate() const {
  if (!(max_react_correction > 0.0)) throw std::invalid_argument("thresholds: max_react_correction must be > 0");
  if (!(max_react_cost > 0.0)) throw std::invalid_argument("thresholds: max_react_cost must be > 0");
  if (!(max_recover_correction >= 0.0)) throw std::invalid_argument("thresholds: max_recover_correction must be >= 0");
}

double displacement_velo_cost(const Vec2& db, const Vec2& corrected) {
  const double a = std::max(db.norm(), kMinDisplacement);
  const double b = std::max(corrected.norm(), kMinDisplacement);
  return std::max(a / b, b / a) - 1.0;
}

double displacement_dir_cost(const Vec2& db, const Vec2& corrected) {
  const double a = db.norm(), b = corrected.norm();
  if (a < kMinDisplacement || b < kMinDisplacement) return 0.0;
  return std::max(0.0, 1.0 - db.dot(corrected) / (a * b));
}

ContactCorrection contact_correction(const ShotCycleClip& clip, const Vec2& start_pos, const BallTrajectory& incoming) {
  if (!clip.t_c || !clip.x_c) throw std::invalid_argument("clip " + clip.id + " has no contact");
  const double t_c = *clip.t_c;
  if (t_c > incoming.end_time) throw BallEndedEarly("incoming ball is dead before contact of clip " + clip.id);
  ContactCorrection c;
  const Vec2 xy = start_pos + (clip.x_c->head<2>() - clip.player_trace.front());
  c.translated_contact = Vec3(xy.x(), xy.y(), clip.x_c->z());
  const Vec3 ball = incoming.position_at(t_c);
  c.e_c = ball.head<2>() - xy;
  c.z_error = std::abs(ball.z() - clip.x_c->z());
  return c;
}

Vec2 recovery_correction(const ShotCycleClip& clip, const Vec2& start_pos, const Vec2& e_c, const Vec2& target,
                         double recovery_end) {
  const double t_c = clip.t_c.value_or(0.0);
  const Vec2 at_contact = start_pos + (clip.player_at(t_c) - clip.player_trace.front()) + e_c;
  const Vec2 x_r = at_contact + (clip.player_at(recovery_end) - clip.player_at(t_c));
  return target - x_r;
}

namespace {

Vec2 clamp_norm(const Vec2& v, double limit) {
  const double n = v.norm();
  return n > limit ? Vec2(v * (limit / n)) : v;
}

double weighted_total(const ClipCostBreakdown& c, const CostWeights& w) {
  return w.pose * c.pose + w.velo * c.velo + w.contact * c.contact + w.react_velo * c.react_velo +
         w.react_dir * c.react_dir + w.recover_velo * c.recover_velo + w.recover_dir * c.recover_dir +
         c.shot_type + w.shot_velo * c.shot_velo + w.shot_place * c.shot_place;
}

}  // namespace

ClipCostBreakdown clip_cost(const ShotCycleClip& clip, const SearchQuery& q, const CostWeights& w,
                            const SearchThresholds& th, CorrectionPlan* plan) {
  ClipCostBreakdown c;
  const Vec2 x0 = clip.player_trace.front();
  c.pose = (q.start_pose - clip.pose_trace.front()).rowwise().norm().mean();
  c.velo = (q.start_velocity - clip.player_velocity_at(0.0)).norm();

  CorrectionPlan p;
  p.offset = q.start_pos - x0;
  p.recovery_end = clip.t_r;

  if (!clip.has_contact()) {
    c.total = w.pose * c.pose + w.velo * c.velo;
    if (plan) *plan = p;
    return c;
  }

  const BehaviorDecision& b = q.behavior;
  if (clip.shot_type != b.shot) {
    c.shot_type = kInf;
    c.total = kInf;
    c.feasible = false;
    return c;
  }
  if (!q.incoming) throw std::invalid_argument("clip_cost: query without an incoming ball");

  ContactCorrection cc;
  try {
    cc = contact_correction(clip, q.start_pos, *q.incoming);
  } catch (const BallEndedEarly&) {
    c.total = kInf;
    c.feasible = false;
    return c;
  }
  const double t_c = *clip.t_c;
  p.e_c = cc.e_c;
  p.z_error = cc.z_error;
  p.t_c = t_c;
  p.contact = Vec3(cc.translated_contact.x() + cc.e_c.x(), cc.translated_contact.y() + cc.e_c.y(),
                   cc.translated_contact.z());
  c.contact = cc.z_error;

  const Vec2 react_db = clip.player_at(t_c) - x0;
  const Vec2 react_cor = react_db + cc.e_c;
  c.react_velo = displacement_velo_cost(react_db, react_cor);
  c.react_dir = displacement_dir_cost(react_db, react_cor);

  p.e_r_raw = recovery_correction(clip, q.start_pos, cc.e_c, b.recovery, clip.t_r);
  p.e_r = clamp_norm(p.e_r_raw, th.max_recover_correction);
  const Vec2 rec_db = clip.player_at(clip.t_r) - clip.player_at(t_c);
  const Vec2 rec_cor = rec_db + p.e_r_raw;
  c.recover_velo = displacement_velo_cost(rec_db, rec_cor);
  c.recover_dir = displacement_dir_cost(rec_db, rec_cor);

  if (clip.v_b) c.shot_velo = std::abs(*clip.v_b - b.velocity);
  if (clip.x_b) c.shot_place = (*clip.x_b + p.offset + cc.e_c - b.placement).norm();

  c.total = weighted_total(c, w);
  c.feasible = cc.e_c.norm() <= th.max_react_correction && c.react_velo + c.react_dir <= th.max_react_cost;
  if (plan) *plan = p;
  return c;
}

SearchResult search(const ClipDatabase& db, const std::string& player, const SearchQuery& q, const CostWeights& w,
                    const SearchThresholds& th) {
  SearchResult r;
  auto consider = [&](std::size_t i) {
    const ShotCycleClip& clip = db.clip(i);
    ++r.candidates;
    const ClipCostBreakdown c = clip_cost(clip, q, w, th);
    if (!c.feasible || !std::isfinite(c.total)) return;
    if (r.clip && (c.total > r.cost.total || (c.total == r.cost.total && clip.id > db.clip(*r.clip).id))) return;
    r.clip = i;
    r.cost = c;
  };

  switch (q.filter) {
    case OutcomeFilter::MustEndNoContact:
      for (std::size_t i : db.by_player_outcome(player, ShotOutcome::NoContact)) consider(i);
      break;
    case OutcomeFilter::MustContinue:
      for (std::size_t i : db.by_player_shot(player, q.behavior.shot))
        if (db.clip(i).outcome == ShotOutcome::InPlay) consider(i);
      break;
    case OutcomeFilter::ContactAny:
      for (std::size_t i : db.by_player_shot(player, q.behavior.shot)) consider(i);
      break;
  }
  if (r.candidates == 0)
    throw EmptyCandidateSet("no " + std::string(to_string(q.filter)) + " clips of '" + player + "' for " +
                            std::string(to_string(q.behavior.shot)));
  if (!r.clip) return r;
  r.reachable = true;
  clip_cost(db.clip(*r.clip), q, w, th, &r.plan);
  return r;
}

void finalize_recovery(const ShotCycleClip& clip, CorrectionPlan& plan, const Vec2& target, double recovery_end,
                       const SearchThresholds& th) {
  const double t_c = clip.t_c.value_or(0.0);
  if (!(recovery_end > t_c)) throw std::invalid_argument("recovery end must follow the contact");
  plan.recovery_end = recovery_end;
  if (!clip.has_contact()) return;
  plan.e_r_raw = recovery_correction(clip, clip.player_trace.front() + plan.offset, plan.e_c, target, recovery_end);
  plan.e_r = clamp_norm(plan.e_r_raw, th.max_recover_correction);
}

Vec2 corrected_position(const ShotCycleClip& clip, const CorrectionPlan& plan, double t) {
  Vec2 p = clip.player_at(t) + plan.offset;
  if (!clip.has_contact()) return p;
  const double t_c = plan.t_c;
  if (t <= t_c) return p + smoothstep(t / t_c) * plan.e_c;
  return p + plan.e_c + smoothstep((t - t_c) / (plan.recovery_end - t_c)) * plan.e_r;
}

std::vector<Vec2> apply_corrections(const ShotCycleClip& clip, const CorrectionPlan& plan) {
  std::vector<Vec2> out;
  const std::size_t n = trace_length(plan.recovery_end, clip.trace_dt);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(corrected_position(clip, plan, i * clip.trace_dt));
  return out;
}

Vec2 corrected_racket_xy(const ShotCycleClip& clip, const CorrectionPlan& plan) {
  return corrected_position(clip, plan, plan.t_c) + (clip.x_c->head<2>() - clip.player_at(plan.t_c));
}

}  // namespace rallyforge
