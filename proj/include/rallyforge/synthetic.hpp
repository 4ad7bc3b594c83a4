#pragma once

#include "rallyforge/clipdb.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rallyforge {

struct ShotSpeed {
  double mean = 20.0;  ///< contact-to-bounce ground speed, m/s
  double std = 2.0;
};

/// Generation parameters for one scripted player.
struct ArchetypeSpec {
  std::string player_id;
  Handedness handedness = Handedness::Right;
  double cross_court_bias = 0.5;  ///< share of groundstrokes hit cross court
  double down_line_bias = 0.25;   ///< share hit down the line; the rest aim through the middle
  double net_approach_rate = 0.1;
  double baseline_depth_mean = 0.9;  ///< recovery depth behind the baseline, m
  double baseline_depth_std = 0.4;
  std::array<ShotSpeed, kShotTypeCount> shot_speed = {
      ShotSpeed{32.0, 2.5}, {23.0, 2.5}, {17.0, 2.0}, {21.0, 2.5}, {16.0, 2.0}, {18.0, 2.5}, {16.0, 2.5}};
  double error_rate = 0.08;
  double slice_rate = 0.15;
  double max_run_speed = 6.0;  ///< average speed limit when chasing a ball, m/s

  void validate() const;
};

struct SyntheticOptions {
  CourtSpec court;
  FlightParams params;
  int max_shots = 60;           ///< per point, serve included
  double reaction_delay = 0.15;
  int max_fit_attempts = 16;
};

/// Scripted rallies between each pairing of archetypes, round robin over
/// points. Deterministic in `seed`. Throws GenerationError.
ClipDatabase generate_synthetic_db(const std::vector<ArchetypeSpec>& players, int n_points, std::uint64_t seed,
                                   const SyntheticOptions& options = {});

/// Archetype files: a JSON array of objects with the ArchetypeSpec member names;
/// shot_speed is keyed by shot type code. Unknown keys and invalid values throw
/// ConfigError.
nlohmann::json to_json(const ArchetypeSpec& a);
ArchetypeSpec archetype_from_json(const nlohmann::json& j);
std::vector<ArchetypeSpec> load_archetypes(const std::string& path);

}  // namespace rallyforge
