#pragma once

#include "rallyforge/behavior.hpp"
#include "rallyforge/clip_search.hpp"
#include "rallyforge/clipdb.hpp"
#include "rallyforge/random.hpp"
#include "rallyforge/trajectory_fit.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace rallyforge {

struct RallyConfig {
  int max_shots = 100;  ///< responses after the serve before the point is ruled a draw
  CostWeights weights;
  SearchThresholds thresholds;
  PlacementFitOptions placement_fit;
  BinConfig bins;
  void validate() const;
};

/// User goals for one player's next shot cycle, in court coordinates.
struct ControlOverride {
  int player = 0;  ///< 0 near, 1 far
  std::optional<Vec2> placement;
  std::optional<Vec2> recovery;
  std::optional<ShotType> shot;
};

enum class RallyPhase : std::uint8_t { Serving, InRally, Ended };
enum class EndReason : std::uint8_t { None, Error, Unreachable, Truncated };
std::string_view to_string(RallyPhase p);
std::string_view to_string(EndReason r);

/// One player's live shot cycle. Court-space fields are global; the clip and
/// its plan live in the player's own near-side frame.
struct PlayerState {
  std::string id;
  Handedness hand = Handedness::Right;
  std::optional<ShotCycleClip> clip;
  CorrectionPlan plan;
  double clip_start = 0.0;      ///< absolute time of clip time 0
  Vec2 recovery_target = Vec2::Zero();
  Vec2 rest_position = Vec2::Zero();  ///< before any clip is active
  Pose rest_pose = Pose::Zero();
};

struct RallyState {
  RallyPhase phase = RallyPhase::Serving;
  int point = 0;
  int responses = 0;     ///< shot cycles after the serve
  int responder = 1;     ///< whose shot cycle starts next
  std::array<PlayerState, 2> players;
  BallTrajectory ball;   ///< global frame, local time 0 at ball_start
  double ball_start = 0.0;
  std::optional<int> winner;
  EndReason reason = EndReason::None;
  int server = 0;
  ServiceCourt service_court = ServiceCourt::Deuce;
};

/// Sequential point simulation. Player 0 plays the near side (y > 0), player 1
/// the far side. Each player decides in its own near-side frame.
class Rally {
 public:
  Rally(const ClipDatabase& db, std::array<const BehaviorModel*, 2> models, std::array<std::string, 2> players,
        int server, int point, std::uint64_t seed, const RallyConfig& config = {});

  /// Chooses and launches the serve. Throws NoServeClips.
  void start();
  /// One shot cycle for the responder. Returns false once the point is over.
  bool step();
  /// Runs to the end of the point.
  void run();

  /// Applies to that player's next shot cycle, replacing any pending one.
  void queue_override(const ControlOverride& o);
  bool has_pending_override(int player) const { return pending_[player].has_value(); }

  const RallyState& state() const { return state_; }
  bool ended() const { return state_.phase == RallyPhase::Ended; }
  /// Absolute time of the latest contact.
  double clock() const { return state_.ball_start; }
  /// Line-delimited event records.
  const std::vector<nlohmann::json>& events() const { return events_; }
  std::string log_text() const;

  /// Player position, velocity and pose at absolute time t (global frame).
  Vec2 player_position(int player, double t) const;
  Vec2 player_velocity(int player, double t) const;
  Pose player_pose(int player, double t) const;

 private:
  void end(int winner, EndReason reason, const std::string& detail);  ///< winner -1: none
  void finalize_opponent_recovery(int hitter, double contact_time);

  const ClipDatabase& db_;
  std::array<const BehaviorModel*, 2> models_;
  RallyConfig config_;
  std::uint64_t seed_;
  std::array<Rng, 2> rng_;
  RallyState state_;
  std::array<std::optional<ControlOverride>, 2> pending_;
  std::vector<nlohmann::json> events_;
};

/// Frame of a player: identity for the near side, a half turn for the far side.
inline Vec2 to_player_frame(const Vec2& p, int player) { return player == 0 ? p : mirror(p); }
inline Vec3 to_player_frame(const Vec3& p, int player) { return player == 0 ? p : mirror(p); }

}  // namespace rallyforge
