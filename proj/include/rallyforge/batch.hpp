#pragma once

#include "rallyforge/rally.hpp"

#include <json.hpp>

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace rallyforge {

struct BatchOptions {
  std::array<std::string, 2> players;  ///< near, far
  int points = 200;
  std::uint64_t seed = 1;
  int threads = 0;  ///< 0: hardware concurrency
  RallyConfig rally;
};

struct PointRecord {
  int point = 0;
  int server = 0;
  std::optional<int> winner;
  EndReason reason = EndReason::None;
  int responses = 0;
  std::vector<nlohmann::json> events;
};

struct PlayerSummary {
  int shots = 0;              ///< contacts after the serve
  int groundstrokes = 0;      ///< groundstroke contacts with a logged direction
  int cross_court = 0;
  double cross_court_fraction = 0.0;
  int recoveries = 0;         ///< baseline recoveries (no net approach)
  double mean_recovery_depth = 0.0;  ///< behind the baseline, m
  int net_approaches = 0;
  double exact_cell_fraction = 0.0;  ///< share of decisions with k = 0
  int points_won = 0;
};

struct BatchSummary {
  int points = 0;
  std::map<int, int> rally_lengths;         ///< responses -> points
  std::map<std::string, int> end_reasons;
  std::map<std::string, PlayerSummary> players;
  double mean_rally_length = 0.0;
};

/// Independent points on a thread pool; results ordered by point index, so the
/// output does not depend on the thread count. Points alternate the server
/// every two points.
std::vector<PointRecord> run_batch(const ClipDatabase& db, std::array<const BehaviorModel*, 2> models,
                                   const BatchOptions& options);

/// Recomputes the summary from logged events only.
BatchSummary summarize(const std::vector<PointRecord>& points, const CourtSpec& court);
nlohmann::json to_json(const BatchSummary& s);
void write_summary_table(std::ostream& out, const BatchSummary& s);
/// All events, one JSON record per line, in point order.
void write_logs(std::ostream& out, const std::vector<PointRecord>& points);

enum class HeatmapKind : std::uint8_t { Placement, Recovery };
std::string_view to_string(HeatmapKind k);

/// Which logged shot cycles a heatmap counts.
enum class Conditioning : std::uint8_t { All, FromDeuce, FromAd };
std::string_view to_string(Conditioning c);

/// Count grid in the hitter's own frame (near side, y > 0). Positions outside
/// the grid are clamped into the border cells, so the cells always sum to the
/// number of counted shots.
struct HeatmapGrid {
  std::string player;
  HeatmapKind kind = HeatmapKind::Placement;
  Conditioning conditioning = Conditioning::All;
  double bandwidth = 0.0;  ///< model bandwidth for this kind, metadata only
  double x0 = -6.0, y0 = 0.0, cell = 0.5;
  int nx = 24, ny = 32;
  std::vector<int> counts;  ///< row-major, y then x
  int total = 0;
};

HeatmapGrid heatmap(const std::vector<PointRecord>& points, const std::string& player, HeatmapKind kind,
                    Conditioning conditioning, double bandwidth, const CourtSpec& court);
/// `#` metadata line, then one row of counts per y cell.
void write_heatmap(std::ostream& out, const HeatmapGrid& g);

}  // namespace rallyforge
