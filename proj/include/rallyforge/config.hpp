#pragma once

#include "rallyforge/behavior.hpp"
#include "rallyforge/clip_search.hpp"
#include "rallyforge/rally.hpp"
#include "rallyforge/trajectory_fit.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace rallyforge {

inline constexpr const char* kConfigEnv = "RALLYFORGE_CONFIG";

/// Every tunable of the engine. All sections and members are optional in the
/// file; anything absent keeps its default. Unknown keys are rejected.
struct EngineConfig {
  CourtSpec court;
  FlightParams flight;
  BinConfig bins;
  CostWeights weights;
  SearchThresholds thresholds;
  KdeConfig kde;
  GridSpec grid;
  PlacementFitOptions placement_fit;
  int max_shots = 100;

  /// Throws ConfigError.
  void validate() const;
  RallyConfig rally() const;

  nlohmann::json to_json() const;
  /// Throws ConfigError naming the offending key or value.
  static EngineConfig from_json(const nlohmann::json& j);
  static EngineConfig load(const std::string& path);
  /// `path` if given, else $RALLYFORGE_CONFIG if set, else defaults.
  static EngineConfig resolve(const std::optional<std::string>& path);
};

}  // namespace rallyforge
