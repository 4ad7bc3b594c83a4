#include "rallyforge/batch.hpp"

#include "rallyforge/types.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace rallyforge {

using nlohmann::json;

std::vector<PointRecord> run_batch(const ClipDatabase& db, std::array<const BehaviorModel*, 2> models,
                                   const BatchOptions& options) {
  if (options.points < 0) throw std::invalid_argument("batch: points must be >= 0");
  options.rally.validate();
  std::vector<PointRecord> out(static_cast<std::size_t>(options.points));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (int i = next++; i < options.points; i = next++) {
      try {
        const int server = (i / 2) % 2;
        Rally r(db, models, options.players, server, i, options.seed, options.rally);
        r.run();
        PointRecord& rec = out[static_cast<std::size_t>(i)];
        rec.point = i;
        rec.server = server;
        rec.winner = r.state().winner;
        rec.reason = r.state().reason;
        rec.responses = r.state().responses;
        rec.events = r.events();
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = options.points;
      }
    }
  };

  int n = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, std::max(1, options.points));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

bool contact(const json& e) { return e["event"] == "shot_cycle" && e["outcome"] != "no_contact"; }

Vec2 xy(const json& j) { return Vec2(j[0].get<double>(), j[1].get<double>()); }

ShotType shot_of(const json& e) {
  if (auto t = shot_type_from_string(e["shot_type"].get<std::string>())) return *t;
  throw std::runtime_error("unknown shot type in log: " + e["shot_type"].dump());
}

}  // namespace

BatchSummary summarize(const std::vector<PointRecord>& points, const CourtSpec& court) {
  BatchSummary s;
  std::map<std::string, double> depth_sum;
  std::map<std::string, int> exact, decisions;
  long total_len = 0;
  for (const PointRecord& p : points) {
    ++s.points;
    ++s.rally_lengths[p.responses];
    total_len += p.responses;
    for (const json& e : p.events) {
      if (e["event"] == "point_end") {
        ++s.end_reasons[e["reason"].get<std::string>()];
        if (!e["winner"].is_null()) ++s.players[e["winner"].get<std::string>()].points_won;
        continue;
      }
      if (e["event"] == "serve") {
        s.players[e["player"].get<std::string>()];
        continue;
      }
      if (!contact(e)) continue;
      const std::string id = e["player"];
      PlayerSummary& ps = s.players[id];
      ++ps.shots;
      ++decisions[id];
      if (e["relaxation"]["k"] == 0) ++exact[id];
      if (is_groundstroke(shot_of(e))) {
        ++ps.groundstrokes;
        if (e["direction"] == "cross") ++ps.cross_court;
      }
      if (e["outcome"] != "in_play") continue;
      if (e["decision"]["approach_net"].get<bool>()) {
        ++ps.net_approaches;
      } else {
        ++ps.recoveries;
        depth_sum[id] += std::abs(xy(e["decision"]["recovery"]).y()) - court.half_length();
      }
    }
  }
  for (auto& [id, ps] : s.players) {
    if (ps.groundstrokes) ps.cross_court_fraction = static_cast<double>(ps.cross_court) / ps.groundstrokes;
    if (ps.recoveries) ps.mean_recovery_depth = depth_sum[id] / ps.recoveries;
    if (decisions[id]) ps.exact_cell_fraction = static_cast<double>(exact[id]) / decisions[id];
  }
  if (s.points) s.mean_rally_length = static_cast<double>(total_len) / s.points;
  return s;
}

json to_json(const BatchSummary& s) {
  json j;
  j["points"] = s.points;
  j["mean_rally_length"] = s.mean_rally_length;
  json lengths = json::object();
  for (const auto& [n, c] : s.rally_lengths) lengths[std::to_string(n)] = c;
  j["rally_lengths"] = lengths;
  j["end_reasons"] = s.end_reasons;
  json players = json::object();
  for (const auto& [id, p] : s.players)
    players[id] = {{"shots", p.shots},
                   {"groundstrokes", p.groundstrokes},
                   {"cross_court", p.cross_court},
                   {"cross_court_fraction", p.cross_court_fraction},
                   {"recoveries", p.recoveries},
                   {"mean_recovery_depth", p.mean_recovery_depth},
                   {"net_approaches", p.net_approaches},
                   {"exact_cell_fraction", p.exact_cell_fraction},
                   {"points_won", p.points_won}};
  j["players"] = players;
  return j;
}

void write_summary_table(std::ostream& out, const BatchSummary& s) {
  out << "points " << s.points << "  mean rally length " << std::fixed << std::setprecision(2) << s.mean_rally_length
      << "\n\nending reason  count\n";
  for (const auto& [r, c] : s.end_reasons) out << std::left << std::setw(15) << r << c << '\n';
  out << "\nresponses  points\n";
  for (const auto& [n, c] : s.rally_lengths) out << std::left << std::setw(11) << n << c << '\n';
  out << "\nplayer        won  shots  cross-court  recovery depth  net  k=0\n";
  for (const auto& [id, p] : s.players)
    out << std::left << std::setw(13) << id << std::right << std::setw(4) << p.points_won << std::setw(7) << p.shots
        << std::setw(13) << std::setprecision(3) << p.cross_court_fraction << std::setw(16) << p.mean_recovery_depth
        << std::setw(5) << p.net_approaches << std::setw(5) << std::setprecision(2) << p.exact_cell_fraction << '\n';
  out.unsetf(std::ios::floatfield);
}

void write_logs(std::ostream& out, const std::vector<PointRecord>& points) {
  for (const auto& p : points)
    for (const auto& e : p.events) out << e.dump() << '\n';
}

std::string_view to_string(HeatmapKind k) { return k == HeatmapKind::Placement ? "placement" : "recovery"; }

std::string_view to_string(Conditioning c) {
  switch (c) {
    case Conditioning::All: return "all";
    case Conditioning::FromDeuce: return "from_deuce";
    case Conditioning::FromAd: return "from_ad";
  }
  return "?";
}

HeatmapGrid heatmap(const std::vector<PointRecord>& points, const std::string& player, HeatmapKind kind,
                    Conditioning conditioning, double bandwidth, const CourtSpec& court) {
  HeatmapGrid g;
  g.player = player;
  g.kind = kind;
  g.conditioning = conditioning;
  g.bandwidth = bandwidth;
  g.y0 = kind == HeatmapKind::Placement ? -16.0 : 0.0;
  g.counts.assign(static_cast<std::size_t>(g.nx * g.ny), 0);
  for (const auto& p : points)
    for (const json& e : p.events) {
      if (!contact(e) || e["player"] != player) continue;
      if (kind == HeatmapKind::Recovery && e["outcome"] != "in_play") continue;
      const int side = e["side"];
      if (conditioning != Conditioning::All) {
        const Lateral lat = region_of(to_player_frame(xy(e["ball_at_contact"]), side), court).lateral;
        if (lat != (conditioning == Conditioning::FromDeuce ? Lateral::Deuce : Lateral::Ad)) continue;
      }
      const Vec2 at = to_player_frame(xy(e["decision"][kind == HeatmapKind::Placement ? "placement" : "recovery"]), side);
      const int ix = std::clamp(static_cast<int>(std::floor((at.x() - g.x0) / g.cell)), 0, g.nx - 1);
      const int iy = std::clamp(static_cast<int>(std::floor((at.y() - g.y0) / g.cell)), 0, g.ny - 1);
      ++g.counts[static_cast<std::size_t>(iy * g.nx + ix)];
      ++g.total;
    }
  return g;
}

void write_heatmap(std::ostream& out, const HeatmapGrid& g) {
  out << "# player=" << g.player << " kind=" << to_string(g.kind) << " conditioning=" << to_string(g.conditioning)
      << " bandwidth=" << g.bandwidth << " x0=" << g.x0 << " y0=" << g.y0 << " cell=" << g.cell << " nx=" << g.nx
      << " ny=" << g.ny << " total=" << g.total << '\n';
  for (int y = 0; y < g.ny; ++y) {
    for (int x = 0; x < g.nx; ++x) out << (x ? "," : "") << g.counts[static_cast<std::size_t>(y * g.nx + x)];
    out << '\n';
  }
}

}  // namespace rallyforge
