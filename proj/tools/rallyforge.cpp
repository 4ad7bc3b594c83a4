#include "rallyforge/batch.hpp"
#include "rallyforge/behavior.hpp"
#include "rallyforge/clipdb.hpp"
#include "rallyforge/config.hpp"
#include "rallyforge/errors.hpp"
#include "rallyforge/http_bridge.hpp"
#include "rallyforge/serialize.hpp"
#include "rallyforge/session.hpp"
#include "rallyforge/synthetic.hpp"
#include "rallyforge/trajectory_fit.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace rallyforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

// Bad paths and unreadable inputs are data problems unless they name the config.
struct DataError : Error {
  using Error::Error;
};

struct Globals {
  std::optional<std::string> config;
  std::string db;
  std::vector<std::string> models;
  std::vector<std::string> players;
  int points = 200;
  std::uint64_t seed = 1;
  std::string out;
  std::string bind = "127.0.0.1:7070";
};

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  return f;
}

// Writes to `path`, or stdout when it is empty or "-".
template <typename F>
void emit(const std::string& path, F&& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
  } else {
    auto f = open_out(path);
    body(f);
  }
}

ClipDatabase require_db(const Globals& g) {
  if (g.db.empty()) throw ConfigError("--db is required");
  if (!fs::exists(g.db)) throw DataError("clip database '" + g.db + "' does not exist");
  return load_db(g.db);
}

void check_bins(const BehaviorModel& m, const EngineConfig& cfg) {
  if (io::to_json(m.bins()) != io::to_json(cfg.bins))
    throw ConfigError("model for '" + m.player() + "' was built with different bins than the config");
}

std::map<std::string, BehaviorModel> load_models(const std::vector<std::string>& paths, const EngineConfig& cfg) {
  std::map<std::string, BehaviorModel> out;
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw DataError("model file '" + p + "' does not exist");
    BehaviorModel m = BehaviorModel::load(p);
    check_bins(m, cfg);
    const std::string id = m.player();
    out.insert_or_assign(id, std::move(m));
  }
  return out;
}

// Opponent-hand filtered fit; the whole pool when the filter leaves nothing.
BehaviorModel fit_for(const ClipDatabase& db, const std::string& player, std::optional<Handedness> opponent_hand,
                      const EngineConfig& cfg) {
  if (opponent_hand) {
    try {
      return BehaviorModel::fit(db, player, OpponentFilter{std::nullopt, opponent_hand}, cfg.bins, cfg.kde);
    } catch (const InsufficientData&) {
      std::cerr << "note: no clips of " << player << " against " << to_string(*opponent_hand)
                << "-handed opponents, fitting on all\n";
    }
  }
  return BehaviorModel::fit(db, player, {}, cfg.bins, cfg.kde);
}

Vec3 parse_vec3(const std::string& s, const char* what) {
  std::stringstream in(s);
  Vec3 v;
  char c1 = 0, c2 = 0;
  if (!(in >> v.x() >> c1 >> v.y() >> c2 >> v.z()) || c1 != ',' || c2 != ',' || !in.eof())
    throw ConfigError(std::string(what) + ": expected x,y,z");
  return v;
}

std::optional<Handedness> parse_hand(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto h = handedness_from_string(s);
  if (!h) throw ConfigError("handedness must be right or left");
  return h;
}

// --- gen-data ------------------------------------------------------------------

std::vector<ArchetypeSpec> default_archetypes() {
  ArchetypeSpec a, b;
  a.player_id = "alpha";
  a.cross_court_bias = 0.7;
  a.down_line_bias = 0.3;
  b.player_id = "beta";
  b.handedness = Handedness::Left;
  b.cross_court_bias = 0.55;
  b.down_line_bias = 0.3;
  b.net_approach_rate = 0.2;
  return {a, b};
}

int cmd_gen_data(const Globals& g, const EngineConfig& cfg, const std::string& archetypes) {
  if (g.out.empty()) throw ConfigError("gen-data: --out is required");
  const auto specs = archetypes.empty() ? default_archetypes() : load_archetypes(archetypes);
  SyntheticOptions opt;
  opt.court = cfg.court;
  opt.params = cfg.flight;
  const ClipDatabase db = generate_synthetic_db(specs, g.points, g.seed, opt);
  if (fs::path(g.out).has_parent_path()) fs::create_directories(fs::path(g.out).parent_path());
  save_db(g.out, db);
  std::cerr << "wrote " << db.size() << " clips for " << specs.size() << " players to " << g.out << '\n';
  return kOk;
}

// --- build-model / inspect-model -------------------------------------------------

json model_summary(const BehaviorModel& m) {
  std::array<int, kShotTypeCount> shots{};
  int recoveries = 0;
  for (const auto& o : m.observations()) {
    ++shots[static_cast<int>(o.shot)];
    recoveries += o.has_recovery;
  }
  json by_shot = json::object();
  for (ShotType t : kAllShotTypes)
    if (shots[static_cast<int>(t)]) by_shot[std::string(to_string(t))] = shots[static_cast<int>(t)];
  return {{"player", m.player()},
          {"observations", m.observations().size()},
          {"recoveries", recoveries},
          {"cells", m.cell_count()},
          {"shots", by_shot},
          {"bandwidths",
           {{"placement", m.bandwidths().placement},
            {"velocity", m.bandwidths().velocity},
            {"recovery", m.bandwidths().recovery}}},
          {"bins", io::to_json(m.bins())}};
}

int cmd_build_model(const Globals& g, const EngineConfig& cfg, const std::string& opponent,
                    const std::string& opponent_hand, const std::string& cells) {
  if (g.out.empty()) throw ConfigError("build-model: --out is required");
  const ClipDatabase db = require_db(g);
  const std::vector<std::string> players = g.players.empty() ? db.players() : g.players;
  if (players.empty()) throw DataError("build-model: the database has no players");
  OpponentFilter filter;
  if (!opponent.empty()) filter.opponent = opponent;
  filter.opponent_hand = parse_hand(opponent_hand);

  const bool single = players.size() == 1 && fs::path(g.out).has_extension();
  for (const auto& p : players) {
    const BehaviorModel m = BehaviorModel::fit(db, p, filter, cfg.bins, cfg.kde);
    const fs::path path = single ? fs::path(g.out) : fs::path(g.out) / (p + ".model.json");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    m.save(path.string());
    std::cout << model_summary(m).dump() << '\n';
    if (!cells.empty()) {
      const fs::path c = players.size() == 1 ? fs::path(cells) : fs::path(cells) / (p + "_cells.csv");
      auto f = open_out(c);
      m.write_cells(f);
    }
  }
  return kOk;
}

int cmd_inspect_model(const Globals& g, const EngineConfig& cfg, const std::string& cells, const std::string& grid,
                      const std::string& shot, double spacing) {
  if (g.models.size() != 1) throw ConfigError("inspect-model: give exactly one --model");
  const auto models = load_models(g.models, cfg);
  const BehaviorModel& m = models.begin()->second;
  std::cout << model_summary(m).dump(2) << '\n';
  if (!cells.empty()) {
    auto f = open_out(cells);
    m.write_cells(f);
  }
  if (!grid.empty()) {
    // Features as player,opponent,ball start,ball bounce region indices (0..5) and velocity bin.
    std::array<int, 5> f{};
    char sep = 0;
    std::stringstream in(grid);
    for (int i = 0; i < 5; ++i) {
      if (!(in >> f[i]) || (i < 4 && (!(in >> sep) || sep != ','))) throw ConfigError("--grid: expected p,o,s,b,v");
      if (f[i] < 0 || (i < 4 && f[i] > 5) || (i == 4 && f[i] >= m.bins().velocity_bins))
        throw ConfigError("--grid: feature out of range");
    }
    const auto t = shot_type_from_string(shot);
    if (!t) throw ConfigError("--shot: unknown shot type '" + shot + "'");
    PointStateDescriptor d;
    d.player_region = CourtRegion::from_index(f[0]);
    d.opponent_region = CourtRegion::from_index(6 + f[1]);
    d.ball_start_region = CourtRegion::from_index(6 + f[2]);
    d.ball_bounce_region = CourtRegion::from_index(f[3]);
    d.velocity_bin = f[4];
    emit(g.out, [&](std::ostream& o) { m.write_placement_grid(o, d, *t, cfg.court, spacing); });
  }
  return kOk;
}

// --- fit-trajectory --------------------------------------------------------------

struct ContactPair {
  std::string id;
  ContactPoint a, b;
  bool volley = false;
};

ContactPair read_pair(const json& j, const std::string& where) {
  ContactPair p;
  try {
    io::ObjectReader r(j, where);
    std::string id;
    r.optional("id", id).optional("volley", p.volley);
    const json* from = r.child("from");
    const json* to = r.child("to");
    double t0 = 0.0, t1 = 0.0;
    r.optional("t0", t0).required("t1", t1);
    if (!from || !to) throw io::SchemaError(where + ": needs 'from' and 'to'");
    r.finish();
    p.id = id;
    p.a = {io::vec3_from(*from, where + ".from"), t0};
    p.b = {io::vec3_from(*to, where + ".to"), t1};
  } catch (const io::SchemaError& e) {
    throw ParseError(e.what());
  }
  if (!(p.b.t > p.a.t)) throw ValidationError(where + ": t1 must exceed t0");
  return p;
}

json fit_record(const ContactPair& p, const EngineConfig& cfg, const CourtSpec& court, const FlightParams& params,
                double sample_dt) {
  json rec = {{"id", p.id}};
  try {
    const FitResult f = fit_trajectory(p.a, p.b, params, court, cfg.grid, p.volley);
    const BallTrajectory& tr = f.trajectory;
    rec["launch"] = {{"origin", io::vec_json(tr.launch.origin)},
                     {"heading", io::vec_json(tr.launch.heading)},
                     {"v_h", tr.launch.v_h},
                     {"v_z", tr.launch.v_z},
                     {"v_spin", tr.launch.v_spin},
                     {"spin", tr.launch.spin_kind == SpinKind::Topspin ? "topspin" : "underspin"}};
    rec["residual"] = f.residual;
    rec["grid_residual"] = f.grid_residual;
    rec["end_time"] = p.a.t + tr.end_time;
    rec["end"] = io::vec_json(tr.end_pos);
    if (auto b = tr.bounce_pos()) rec["bounce"] = io::vec_json(*b);
    if (auto bt = tr.bounce_time()) rec["bounce_time"] = p.a.t + *bt;
    if (tr.net_clearance) rec["net_clearance"] = *tr.net_clearance;
    json samples = json::array();
    const int n = static_cast<int>(std::floor(tr.end_time / sample_dt + 1e-9));
    for (int i = 0; i <= n; ++i) {
      const double t = std::min(i * sample_dt, tr.end_time);
      const Vec3 x = tr.position_at(t);
      samples.push_back({p.a.t + t, x.x(), x.y(), x.z()});
    }
    if (n * sample_dt < tr.end_time - 1e-9)
      samples.push_back({p.a.t + tr.end_time, tr.end_pos.x(), tr.end_pos.y(), tr.end_pos.z()});
    rec["samples"] = std::move(samples);
  } catch (const NoFeasibleTrajectory& e) {
    rec["error"] = e.what();
  }
  return rec;
}

int cmd_fit_trajectory(const Globals& g, const EngineConfig& cfg, const std::string& input, const std::string& from,
                       const std::string& to, double dt, bool volley, double sample_dt) {
  if (!(sample_dt > 0.0)) throw ConfigError("--sample-dt must be positive");
  std::vector<ContactPair> pairs;
  if (!input.empty()) {
    if (!from.empty() || !to.empty()) throw ConfigError("fit-trajectory: use either --input or --from/--to");
    std::ifstream in(input);
    if (!in) throw DataError("cannot open '" + input + "'");
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(input + ":" + std::to_string(n) + ": " + e.what());
      }
      ContactPair p = read_pair(j, input + ":" + std::to_string(n));
      if (p.id.empty()) p.id = std::to_string(n);
      pairs.push_back(std::move(p));
    }
  } else {
    if (from.empty() || to.empty()) throw ConfigError("fit-trajectory: --from and --to are required without --input");
    if (!(dt > 0.0)) throw ConfigError("--dt must be positive");
    pairs.push_back({"1", {parse_vec3(from, "--from"), 0.0}, {parse_vec3(to, "--to"), dt}, volley});
  }
  // A database, when given, supplies the court and flight constants it was built with.
  CourtSpec court = cfg.court;
  FlightParams params = cfg.flight;
  if (!g.db.empty()) {
    const ClipDatabase db = require_db(g);
    court = db.court();
    params = db.params();
  }
  int failed = 0;
  emit(g.out, [&](std::ostream& o) {
    for (const auto& p : pairs) {
      const json rec = fit_record(p, cfg, court, params, sample_dt);
      failed += rec.contains("error");
      o << rec.dump() << '\n';
    }
  });
  if (failed) std::cerr << failed << " of " << pairs.size() << " pairs had no feasible trajectory\n";
  return kOk;
}

// --- simulate ----------------------------------------------------------------------

std::array<std::string, 2> two_players(const Globals& g, const ClipDatabase& db) {
  std::vector<std::string> p = g.players;
  if (p.empty()) p = db.players();
  if (p.size() != 2) throw ConfigError("simulate: --players needs exactly two ids (near,far)");
  for (const auto& id : p)
    if (db.by_player(id).empty()) throw DataError("player '" + id + "' has no clips in the database");
  return {p[0], p[1]};
}

std::map<std::string, BehaviorModel> models_for(const Globals& g, const ClipDatabase& db,
                                                const std::array<std::string, 2>& players,
                                                const EngineConfig& cfg) {
  auto models = load_models(g.models, cfg);
  for (int i = 0; i < 2; ++i) {
    if (models.count(players[i])) continue;
    models.emplace(players[i], fit_for(db, players[i], db.handedness(players[1 - i]), cfg));
  }
  return models;
}

int cmd_simulate(const Globals& g, const EngineConfig& cfg, int threads) {
  if (g.out.empty()) throw ConfigError("simulate: --out is required");
  if (g.points < 0) throw ConfigError("--points must be >= 0");
  const ClipDatabase db = require_db(g);
  const auto players = two_players(g, db);
  const auto models = models_for(g, db, players, cfg);

  BatchOptions opt;
  opt.players = players;
  opt.points = g.points;
  opt.seed = g.seed;
  opt.threads = threads;
  opt.rally = cfg.rally();
  const auto points = run_batch(db, {&models.at(players[0]), &models.at(players[1])}, opt);
  const BatchSummary s = summarize(points, db.court());

  const fs::path out(g.out);
  fs::create_directories(out / "heatmaps");
  {
    auto f = open_out(out / "log.jsonl");
    write_logs(f, points);
  }
  {
    auto f = open_out(out / "summary.json");
    f << to_json(s).dump(2) << '\n';
  }
  {
    auto f = open_out(out / "summary.txt");
    write_summary_table(f, s);
  }
  for (const auto& p : players) {
    const Bandwidths& bw = models.at(p).bandwidths();
    for (HeatmapKind k : {HeatmapKind::Placement, HeatmapKind::Recovery})
      for (Conditioning c : {Conditioning::All, Conditioning::FromDeuce, Conditioning::FromAd}) {
        const double h = k == HeatmapKind::Placement ? bw.placement : bw.recovery;
        const HeatmapGrid grid = heatmap(points, p, k, c, h, db.court());
        auto f = open_out(out / "heatmaps" /
                          (p + "_" + std::string(to_string(k)) + "_" + std::string(to_string(c)) + ".csv"));
        write_heatmap(f, grid);
      }
  }
  write_summary_table(std::cout, s);
  return kOk;
}

// --- stats / serve -------------------------------------------------------------------

int cmd_stats(const Globals& g) {
  const ClipDatabase db = require_db(g);
  emit(g.out, [&](std::ostream& o) { write_stats(o, db); });
  return kOk;
}

int cmd_serve(const Globals& g, const EngineConfig& cfg, const std::string& http) {
  const ClipDatabase db = require_db(g);
  auto models = load_models(g.models, cfg);
  for (const auto& p : g.players.empty() ? db.players() : g.players) {
    if (db.by_player(p).empty()) throw DataError("player '" + p + "' has no clips in the database");
    if (!models.count(p)) models.emplace(p, BehaviorModel::fit(db, p, {}, cfg.bins, cfg.kde));
  }
  const auto [host, port] = parse_bind(g.bind);
  SessionManager manager(db, std::move(models), cfg);

  // Signals are taken synchronously by one thread so shutdown runs outside a handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  TcpServer tcp(manager);
  tcp.bind(host, port);
  std::cout << "listening tcp " << host << ':' << tcp.port() << std::endl;
  std::unique_ptr<HttpBridge> bridge;
  std::thread http_loop;
  if (!http.empty()) {
    const auto [hh, hp] = parse_bind(http);
    bridge = std::make_unique<HttpBridge>(manager);
    const int bound = bridge->bind(hh, hp);
    std::cout << "listening http " << hh << ':' << bound << std::endl;
    http_loop = std::thread([&] { bridge->run(); });
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    tcp.stop();
    if (bridge) bridge->stop();
  });
  tcp.run();
  if (http_loop.joinable()) http_loop.join();
  waiter.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tennis rally simulation from a clip database"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::string seed_text;
  app.add_option("--config", g.config, "engine config file (falls back to $RALLYFORGE_CONFIG)");
  app.add_option("--db", g.db, "clip database file");
  app.add_option("--model", g.models, "behavior model file (repeatable)");
  app.add_option("--players", g.players, "player ids, near first")->delimiter(',');
  app.add_option("--points", g.points, "points to simulate or generate");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--out", g.out, "output file or directory");
  app.add_option("--bind", g.bind, "service address host:port");

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic clip database");
  std::string archetypes;
  gen->add_option("--archetypes", archetypes, "JSON array of player archetypes");

  auto* build = app.add_subcommand("build-model", "fit behavior models");
  std::string opponent, opponent_hand, build_cells;
  build->add_option("--opponent", opponent, "only clips against this opponent");
  build->add_option("--opponent-hand", opponent_hand, "only clips against right or left handers");
  build->add_option("--cells", build_cells, "write per-cell supports as CSV");

  auto* inspect = app.add_subcommand("inspect-model", "summarize a model file");
  std::string inspect_cells, grid, shot = "FH-T";
  double spacing = 0.25;
  inspect->add_option("--cells", inspect_cells, "write per-cell supports as CSV");
  inspect->add_option("--grid", grid, "placement density grid for cell features p,o,s,b,v (written to --out)");
  inspect->add_option("--shot", shot, "shot type for --grid");
  inspect->add_option("--spacing", spacing, "grid spacing, m")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit-trajectory", "fit ball flights between contact pairs");
  std::string input, from, to;
  double dt = 0.0, sample_dt = 0.02;
  bool volley = false;
  fit->add_option("--input", input, "line-delimited contact pairs");
  fit->add_option("--from", from, "first contact x,y,z");
  fit->add_option("--to", to, "second contact x,y,z");
  fit->add_option("--dt", dt, "time between the contacts, s");
  fit->add_flag("--volley", volley, "second contact is taken before the bounce");
  fit->add_option("--sample-dt", sample_dt, "output sample spacing, s");

  auto* sim = app.add_subcommand("simulate", "simulate a batch of points");
  int threads = 0;
  sim->add_option("--threads", threads, "worker threads (0: all cores)");

  auto* stats = app.add_subcommand("stats", "per-player clip counts");
  auto* serve = app.add_subcommand("serve", "interactive session service");
  std::string http;
  serve->add_option("--http", http, "also serve the HTTP bridge on host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    const EngineConfig cfg = EngineConfig::resolve(g.config);
    if (*gen) return cmd_gen_data(g, cfg, archetypes);
    if (*build) return cmd_build_model(g, cfg, opponent, opponent_hand, build_cells);
    if (*inspect) return cmd_inspect_model(g, cfg, inspect_cells, grid, shot, spacing);
    if (*fit) return cmd_fit_trajectory(g, cfg, input, from, to, dt, volley, sample_dt);
    if (*sim) return cmd_simulate(g, cfg, threads);
    if (*stats) return cmd_stats(g);
    if (*serve) return cmd_serve(g, cfg, http);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ValidationError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const InsufficientData& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NoData& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NoServeClips& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}
