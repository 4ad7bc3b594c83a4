#pragma once

#include "rallyforge/ball_physics.hpp"
#include "rallyforge/clipdb.hpp"
#include "rallyforge/court.hpp"
#include "rallyforge/random.hpp"
#include "rallyforge/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rallyforge {

/// Discretized state at the start of a shot cycle, in the deciding player's
/// near-side frame.
struct PointStateDescriptor {
  CourtRegion player_region;
  CourtRegion opponent_region;
  CourtRegion ball_start_region;
  CourtRegion ball_bounce_region;
  int velocity_bin = 0;

  /// Within-side region indices (0..5) followed by the velocity bin.
  std::array<int, 5> features() const {
    return {player_region.local_index(), opponent_region.local_index(), ball_start_region.local_index(),
            ball_bounce_region.local_index(), velocity_bin};
  }
  /// Injective cell id in [0, 6^4 * velocity_bins).
  int cell(const BinConfig& bins) const;
  friend bool operator==(const PointStateDescriptor&, const PointStateDescriptor&) = default;
};

/// Relaxable features, least important first.
enum class Feature : std::uint8_t { Velocity = 0, BallBounce = 1, BallStart = 2, Opponent = 3 };
std::string_view to_string(Feature f);

/// A set of relaxed features as a bitmask over Feature ranks.
struct Relaxation {
  std::uint8_t mask = 0;
  bool placement = false;  ///< recovery lookups only: placement region also dropped
  bool player = false;     ///< last resort: the player's whole pool
  int k() const { return __builtin_popcount(mask) + (placement ? 1 : 0) + (player ? 1 : 0); }
  bool relaxes(Feature f) const { return mask >> static_cast<int>(f) & 1; }
  std::string describe() const;
};

/// The 16 subsets of relaxable features in lookup order: by size, then
/// lexicographically by importance rank.
const std::array<std::uint8_t, 16>& relaxation_order();

struct DescriptorEstimate {
  PointStateDescriptor descriptor;
  double contact_time = 0.0;  ///< local time on the incoming trajectory
  Vec3 contact = Vec3::Zero();
  double reach_velocity = 0.0;
};

/// Descriptor for a player about to react. `incoming` starts at the opponent's
/// contact; `now` is the local time on it. Throws NoIntersection when the ball
/// never reaches the player's depth.
DescriptorEstimate build_descriptor(const BallTrajectory& incoming, double now, const Vec2& player_pos,
                                    const Vec2& opponent_recovery, const CourtSpec& court, const BinConfig& bins);

/// Descriptor of a database clip from its annotations: contact position,
/// opponent position at contact, incoming start and bounce.
PointStateDescriptor clip_descriptor(const ShotCycleClip& clip, const CourtSpec& court, const BinConfig& bins);

// --- kernel density estimates ---------------------------------------------------

double kde_density(const std::vector<double>& support, double x, double h);
double kde_density(const std::vector<Vec2>& support, const Vec2& x, double h);
/// Sum of leave-one-out log densities, evaluated in log space.
double loo_log_likelihood(const std::vector<double>& support, double h);
double loo_log_likelihood(const std::vector<Vec2>& support, double h);

struct KdeConfig {
  std::vector<double> position_grid = {0.25, 0.5, 0.75, 1.0, 1.5};
  std::vector<double> velocity_grid = {0.5, 1.0, 2.0, 4.0};
  double reject_fraction = 0.1;  ///< of the peak density
  int max_attempts = 64;
  void validate() const;
};

struct Bandwidths {
  double placement = 0.75;
  double velocity = 1.0;
  double recovery = 0.75;
};

// --- model ---------------------------------------------------------------------

/// One database clip's contribution to a player's model.
struct Observation {
  std::string clip_id;
  std::array<int, 5> features{};
  ShotType shot = ShotType::ForehandTopspin;
  double v_b = 0.0;
  Vec2 x_b = Vec2::Zero();
  int placement_region = 0;
  bool has_recovery = false;
  Vec2 x_r = Vec2::Zero();
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ShotSelection {
  ShotType shot = ShotType::ForehandTopspin;
  double velocity = 0.0;
  Vec2 placement = Vec2::Zero();
  Relaxation relaxation;
};

struct RecoveryDecision {
  bool approach_net = false;
  Vec2 position = Vec2::Zero();
  double p_approach = 0.0;
  Relaxation relaxation;
};

/// Full decision for one shot cycle.
struct BehaviorDecision {
  ShotType shot = ShotType::ForehandTopspin;
  double velocity = 0.0;  ///< contact-to-bounce ground speed
  Vec2 placement = Vec2::Zero();
  Vec2 recovery = Vec2::Zero();
  bool approach_net = false;
};

struct OpponentFilter {
  std::optional<std::string> opponent;
  std::optional<Handedness> opponent_hand;
};

class BehaviorModel {
 public:
  struct Density1 {
    std::vector<double> support;
    double peak = 0.0;
    double mode = 0.0;
  };
  struct Density2 {
    std::vector<Vec2> support;
    double peak = 0.0;
    Vec2 mode = Vec2::Zero();
  };
  /// Shot-selection distributions pooled over one (possibly relaxed) cell.
  struct ShotGroup {
    std::vector<std::uint32_t> members;  ///< observation indices, ascending
    std::array<std::uint32_t, kShotTypeCount> counts{};
    std::array<Density1, kShotTypeCount> velocity;
    std::array<Density2, kShotTypeCount> placement;
  };
  struct RecoveryGroup {
    std::vector<std::uint32_t> members;
    std::uint32_t front = 0;
    std::array<Density2, 2> position;  ///< indexed by approach (front) flag
  };

  BehaviorModel() = default;

  /// Fits from the player's return shots. Bandwidths come from leave-one-out
  /// likelihood over the config grids. Throws InsufficientData.
  static BehaviorModel fit(const ClipDatabase& db, const std::string& player, const OpponentFilter& filter,
                           const BinConfig& bins, const KdeConfig& kde = {});
  static BehaviorModel from_observations(std::string player, std::vector<Observation> obs, const BinConfig& bins,
                                         const KdeConfig& kde, const Bandwidths& bw, const CourtSpec& court = {});

  const std::string& player() const { return player_; }
  const std::vector<Observation>& observations() const { return obs_; }
  const Bandwidths& bandwidths() const { return bw_; }
  const BinConfig& bins() const { return bins_; }
  const KdeConfig& kde() const { return kde_; }

  /// Exact cell first, then relaxed cells in order. Throws NoData when no
  /// clip shares the player region.
  std::pair<const ShotGroup*, Relaxation> lookup_shot(const PointStateDescriptor& d) const;
  std::pair<const RecoveryGroup*, Relaxation> lookup_recovery(const PointStateDescriptor& d, int placement_region) const;

  /// Falls back to the player's whole pool when lookup_shot finds nothing.
  ShotSelection sample_shot_selection(const PointStateDescriptor& d, Rng& rng) const;
  RecoveryDecision recovery_target(const PointStateDescriptor& d, int placement_region, Rng& rng) const;

  double placement_density(const ShotGroup& g, ShotType t, const Vec2& x) const {
    return kde_density(g.placement[static_cast<int>(t)].support, x, bw_.placement);
  }
  double velocity_density(const ShotGroup& g, ShotType t, double v) const {
    return kde_density(g.velocity[static_cast<int>(t)].support, v, bw_.velocity);
  }
  double recovery_density(const RecoveryGroup& g, bool front, const Vec2& x) const {
    return kde_density(g.position[front ? 1 : 0].support, x, bw_.recovery);
  }

  /// Number of populated exact cells.
  std::size_t cell_count() const { return shot_levels_[0].size(); }
  const std::unordered_map<std::uint64_t, ShotGroup>& exact_cells() const { return shot_levels_[0]; }

  void write(std::ostream& out) const;
  static BehaviorModel read(std::istream& in);
  void save(const std::string& path) const;
  static BehaviorModel load(const std::string& path);

  /// Per exact cell: features, support size and shot-type counts (CSV).
  void write_cells(std::ostream& out) const;
  /// Placement density of one (cell, shot type) on a regular grid over the
  /// opponent's half, as CSV with a metadata header.
  void write_placement_grid(std::ostream& out, const PointStateDescriptor& d, ShotType t, const CourtSpec& court,
                            double spacing = 0.25) const;

 private:
  void build();

  std::string player_;
  std::vector<Observation> obs_;
  BinConfig bins_;
  KdeConfig kde_;
  Bandwidths bw_;
  double front_boundary_ = CourtSpec{}.depth_boundary();
  std::array<std::unordered_map<std::uint64_t, ShotGroup>, 16> shot_levels_;
  std::array<std::unordered_map<std::uint64_t, RecoveryGroup>, 17> recovery_levels_;
  ShotGroup pool_;
  RecoveryGroup recovery_pool_;
};

}  // namespace rallyforge
