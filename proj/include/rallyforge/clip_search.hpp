#pragma once

#include "rallyforge/ball_physics.hpp"
#include "rallyforge/behavior.hpp"
#include "rallyforge/clipdb.hpp"

#include <limits>
#include <optional>
#include <string>

namespace rallyforge {

enum class OutcomeFilter : std::uint8_t { MustContinue, MustEndNoContact, ContactAny };
std::string_view to_string(OutcomeFilter f);

struct CostWeights {
  double pose = 1.0;
  double velo = 1.0;
  double contact = 0.5;
  double react_velo = 5.0;
  double react_dir = 5.0;
  double recover_velo = 3.0;
  double recover_dir = 10.0;
  double shot_velo = 1.0;
  double shot_place = 0.5;
  void validate() const;
};

struct SearchThresholds {
  double max_react_correction = 2.0;    ///< m, on |e_c2d|
  double max_react_cost = 3.0;          ///< on C_react,velo + C_react,dir
  double max_recover_correction = 1.5;  ///< m, clamp on e_r
  void validate() const;
};

/// Everything the search needs about the responder's situation. Clip time 0
/// coincides with local time 0 of `incoming`.
struct SearchQuery {
  BehaviorDecision behavior;
  const BallTrajectory* incoming = nullptr;
  Vec2 start_pos = Vec2::Zero();
  Pose start_pose = Pose::Zero();
  Vec2 start_velocity = Vec2::Zero();
  OutcomeFilter filter = OutcomeFilter::MustContinue;
};

struct ClipCostBreakdown {
  double pose = 0.0, velo = 0.0, contact = 0.0;
  double react_velo = 0.0, react_dir = 0.0;
  double recover_velo = 0.0, recover_dir = 0.0;
  double shot_type = 0.0, shot_velo = 0.0, shot_place = 0.0;
  double total = 0.0;
  /// Within the feasibility thresholds.
  bool feasible = true;
};

/// Translation of a clip onto the live situation.
struct CorrectionPlan {
  Vec2 offset = Vec2::Zero();  ///< start_pos - x_p^i(0)
  Vec2 e_c = Vec2::Zero();     ///< contact correction, court plane
  double z_error = 0.0;        ///< uncorrectable racket height error
  Vec2 e_r = Vec2::Zero();     ///< recovery correction, clamped
  Vec2 e_r_raw = Vec2::Zero(); ///< before clamping
  Vec3 contact = Vec3::Zero(); ///< corrected racket position at contact
  double t_c = 0.0;
  double recovery_end = 0.0;
};

/// Degenerate-displacement threshold for the ratio and cosine terms.
inline constexpr double kMinDisplacement = 0.01;

/// max(r, 1/r) - 1 for the displacement ratio r, lengths floored at 1 cm.
double displacement_velo_cost(const Vec2& db, const Vec2& corrected);
/// 1 - cos of the angle between displacements; 0 if either is under 1 cm.
double displacement_dir_cost(const Vec2& db, const Vec2& corrected);

struct ContactCorrection {
  Vec2 e_c = Vec2::Zero();
  double z_error = 0.0;
  Vec3 translated_contact = Vec3::Zero();
};
/// Throws BallEndedEarly when the incoming flight ends before the clip's contact.
ContactCorrection contact_correction(const ShotCycleClip& clip, const Vec2& start_pos, const BallTrajectory& incoming);

/// Residual from the corrected end-of-recovery position to `target`.
Vec2 recovery_correction(const ShotCycleClip& clip, const Vec2& start_pos, const Vec2& e_c, const Vec2& target,
                         double recovery_end);

/// Cost of one clip against the query. Infeasible combinations (ball ended
/// early, wrong shot type) give an infinite total. Fills `plan` when given.
ClipCostBreakdown clip_cost(const ShotCycleClip& clip, const SearchQuery& query, const CostWeights& w,
                            const SearchThresholds& th, CorrectionPlan* plan = nullptr);

struct SearchResult {
  bool reachable = false;
  std::optional<std::size_t> clip;  ///< database index of the winner
  ClipCostBreakdown cost;
  CorrectionPlan plan;
  std::size_t candidates = 0;
};

/// Argmin over the player's clips passing the outcome filter and the shot
/// type. Ties go to the lowest clip id. Unreachable when no candidate is
/// feasible. Throws EmptyCandidateSet.
SearchResult search(const ClipDatabase& db, const std::string& player, const SearchQuery& query,
                    const CostWeights& w = {}, const SearchThresholds& th = {});

/// Re-plans the recovery blend for a new recovery end time.
void finalize_recovery(const ShotCycleClip& clip, CorrectionPlan& plan, const Vec2& target, double recovery_end,
                       const SearchThresholds& th);

/// Corrected root position at clip time t.
Vec2 corrected_position(const ShotCycleClip& clip, const CorrectionPlan& plan, double t);
/// Corrected trace sampled at the clip's dt over [0, recovery_end].
std::vector<Vec2> apply_corrections(const ShotCycleClip& clip, const CorrectionPlan& plan);
/// Racket XY at contact after correction.
Vec2 corrected_racket_xy(const ShotCycleClip& clip, const CorrectionPlan& plan);

}  // namespace rallyforge
