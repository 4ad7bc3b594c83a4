#pragma once

#include "rallyforge/ball_physics.hpp"
#include "rallyforge/court.hpp"
#include "rallyforge/types.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rallyforge {

inline constexpr int kKeypoints = 14;
inline constexpr int kClipFormatVersion = 1;
inline constexpr double kTraceDt = 1.0 / 25.0;

/// Body keypoints in a player-local frame (x toward the racket side for a
/// right-hander, y up), scaled to unit torso length.
using Pose = Eigen::Matrix<double, kKeypoints, 2>;

/// Ease-in/ease-out weight: w(0)=0, w(1)=1, zero slope at both ends. Clamped outside [0,1].
inline double smoothstep(double u) {
  u = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
  return u * u * (3.0 - 2.0 * u);
}

/// One annotated shot cycle. Clip time starts at 0 when the opponent hits
/// (or when the serve motion starts). Stored in the near-side frame.
struct ShotCycleClip {
  std::string id;
  std::string player_id;
  std::string opponent_id;
  Handedness handedness = Handedness::Right;
  bool mirrored = false;  ///< recorded on the far side and rotated onto the near side

  std::optional<double> t_c;  ///< contact time
  double t_r = 0.0;           ///< clip length
  std::optional<ShotType> shot_type;
  ShotOutcome outcome = ShotOutcome::InPlay;
  std::optional<Vec3> x_c;     ///< racket position at contact
  std::optional<double> t_b;   ///< bounce time of the player's own shot
  std::optional<Vec2> x_b;     ///< bounce position of the player's own shot
  std::optional<double> v_b;   ///< ground speed contact to bounce

  /// Incoming ball: where the opponent struck it and where it bounced (or
  /// would have). Absent for serves.
  std::optional<Vec3> incoming_start;
  std::optional<Vec2> incoming_bounce;

  double trace_dt = kTraceDt;
  std::vector<Vec2> player_trace;
  std::vector<Vec2> opponent_trace;
  std::vector<Pose> pose_trace;

  bool has_contact() const { return outcome != ShotOutcome::NoContact; }
  Vec2 player_at(double t) const;
  Vec2 opponent_at(double t) const;
  Pose pose_at(double t) const;
  /// Forward difference over one trace interval.
  Vec2 player_velocity_at(double t) const;
  Vec2 recovery_position() const { return player_at(t_r); }

  /// Rotates every court-space field 180 degrees and flips `mirrored`.
  ShotCycleClip mirrored_copy() const;
  /// Returns a description of the first violated invariant, or nothing.
  std::optional<std::string> check(const CourtSpec& court) const;

  friend bool operator==(const ShotCycleClip&, const ShotCycleClip&);
};

/// Samples needed to cover [0, t_r] at spacing dt.
std::size_t trace_length(double t_r, double dt);

class ClipDatabase {
 public:
  ClipDatabase() = default;
  ClipDatabase(CourtSpec court, FlightParams params) : court_(court), params_(params) {}

  const CourtSpec& court() const { return court_; }
  const FlightParams& params() const { return params_; }
  const std::vector<ShotCycleClip>& clips() const { return clips_; }
  const ShotCycleClip& clip(std::size_t i) const { return clips_[i]; }
  std::size_t size() const { return clips_.size(); }
  bool empty() const { return clips_.empty(); }

  /// Validates, rotates far-side clips onto the near side, and indexes.
  /// Throws ValidationError.
  void add(ShotCycleClip clip);

  const std::vector<std::size_t>& by_player(const std::string& player) const;
  const std::vector<std::size_t>& by_player_shot(const std::string& player, ShotType type) const;
  const std::vector<std::size_t>& by_player_outcome(const std::string& player, ShotOutcome outcome) const;
  const std::vector<std::size_t>& by_shot_type(ShotType type) const { return by_shot_[static_cast<int>(type)]; }
  const std::vector<std::size_t>& by_outcome(ShotOutcome o) const { return by_outcome_[static_cast<int>(o)]; }
  std::vector<std::string> players() const;
  std::optional<Handedness> handedness(const std::string& player) const;
  std::optional<std::size_t> find(const std::string& id) const;

  friend bool operator==(const ClipDatabase&, const ClipDatabase&);

 private:
  struct PlayerIndex {
    std::vector<std::size_t> all;
    std::array<std::vector<std::size_t>, kShotTypeCount> by_shot;
    std::array<std::vector<std::size_t>, 4> by_outcome;
    Handedness hand = Handedness::Right;
  };

  CourtSpec court_;
  FlightParams params_;
  std::vector<ShotCycleClip> clips_;
  std::map<std::string, std::size_t> ids_;
  std::map<std::string, PlayerIndex> players_;
  std::array<std::vector<std::size_t>, kShotTypeCount> by_shot_;
  std::array<std::vector<std::size_t>, 4> by_outcome_;
};

/// Line-delimited JSON: a header line, then one clip per line.
/// Throws ParseError or ValidationError; both carry the number of bad records.
ClipDatabase read_db(std::istream& in);
ClipDatabase load_db(const std::string& path);
void write_db(std::ostream& out, const ClipDatabase& db);
void save_db(const std::string& path, const ClipDatabase& db);

/// Per-player shot-type counts and total clip duration as CSV.
void write_stats(std::ostream& out, const ClipDatabase& db);

}  // namespace rallyforge
