#include "rallyforge/clipdb.hpp"

#include "rallyforge/errors.hpp"
#include "rallyforge/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rallyforge {

using io::json;

std::size_t trace_length(double t_r, double dt) {
  return static_cast<std::size_t>(std::ceil(t_r / dt - 1e-9)) + 1;
}

namespace {

template <typename T>
T trace_lookup(const std::vector<T>& trace, double dt, double t) {
  if (trace.empty()) throw std::logic_error("empty trace");
  const double u = t / dt;
  if (u <= 0.0) return trace.front();
  const auto i = static_cast<std::size_t>(u);
  if (i + 1 >= trace.size()) return trace.back();
  const double f = u - static_cast<double>(i);
  return ((1.0 - f) * trace[i] + f * trace[i + 1]).eval();
}

bool finite(const Vec2& v) { return v.allFinite(); }

}  // namespace

Vec2 ShotCycleClip::player_at(double t) const { return trace_lookup(player_trace, trace_dt, t); }
Vec2 ShotCycleClip::opponent_at(double t) const { return trace_lookup(opponent_trace, trace_dt, t); }
Pose ShotCycleClip::pose_at(double t) const { return trace_lookup(pose_trace, trace_dt, t); }

Vec2 ShotCycleClip::player_velocity_at(double t) const {
  return (player_at(t + trace_dt) - player_at(t)) / trace_dt;
}

ShotCycleClip ShotCycleClip::mirrored_copy() const {
  ShotCycleClip m = *this;
  m.mirrored = !mirrored;
  if (m.x_c) m.x_c = mirror(*m.x_c);
  if (m.x_b) m.x_b = mirror(*m.x_b);
  if (m.incoming_start) m.incoming_start = mirror(*m.incoming_start);
  if (m.incoming_bounce) m.incoming_bounce = mirror(*m.incoming_bounce);
  for (auto& p : m.player_trace) p = mirror(p);
  for (auto& p : m.opponent_trace) p = mirror(p);
  return m;
}

std::optional<std::string> ShotCycleClip::check(const CourtSpec& court) const {
  if (id.empty()) return "empty id";
  if (player_id.empty() || opponent_id.empty()) return "missing player or opponent id";
  if (!(trace_dt > 0.0) || !std::isfinite(trace_dt)) return "trace dt must be positive";
  if (!(t_r > 0.0) || !std::isfinite(t_r)) return "t_r must be positive";
  const std::size_t n = trace_length(t_r, trace_dt);
  if (player_trace.size() != n || opponent_trace.size() != n || pose_trace.size() != n)
    return "traces must hold " + std::to_string(n) + " samples covering [0, t_r]";
  for (std::size_t i = 0; i < n; ++i) {
    if (!finite(player_trace[i]) || !finite(opponent_trace[i])) return "non-finite trace position";
    if (!pose_trace[i].allFinite()) return "non-finite pose keypoint";
  }

  if (!has_contact()) {
    if (t_c || shot_type || x_c || t_b || x_b || v_b) return "no_contact clip carries contact annotations";
    return std::nullopt;
  }
  if (!t_c) return "contact clip without t_c";
  if (!(*t_c > 0.0 && *t_c < t_r)) return "t_c must satisfy 0 < t_c < t_r";
  if (!shot_type) return "contact clip without shot_type";
  if (!x_c || !x_c->allFinite()) return "contact clip without a finite x_c";
  if (x_b.has_value() != t_b.has_value() || x_b.has_value() != v_b.has_value())
    return "x_b, t_b and v_b must be given together";
  if (t_b && !(*t_b > *t_c)) return "t_b must follow t_c";
  if (v_b && !(*v_b > 0.0)) return "v_b must be positive";
  if (x_b && !finite(*x_b)) return "non-finite x_b";
  if (outcome != ShotOutcome::Error) {
    if (!x_b) return "in-court shot without placement";
    const Side own = side_of(player_trace.front().y());
    const Side other = own == Side::Near ? Side::Far : Side::Near;
    if (!in_singles_half(*x_b, other, court)) return "placement of an in-court shot is not in the opponent's half";
  }
  const bool serve = *shot_type == ShotType::Serve;
  if (serve && (incoming_start || incoming_bounce)) return "serve carries an incoming ball";
  if (!serve && (!incoming_start || !incoming_bounce)) return "return shot without incoming ball annotation";
  return std::nullopt;
}

bool operator==(const ShotCycleClip& a, const ShotCycleClip& b) {
  auto same_traces = [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] != y[i]) return false;
    return true;
  };
  return a.id == b.id && a.player_id == b.player_id && a.opponent_id == b.opponent_id &&
         a.handedness == b.handedness && a.mirrored == b.mirrored && a.t_c == b.t_c && a.t_r == b.t_r &&
         a.shot_type == b.shot_type && a.outcome == b.outcome && a.x_c == b.x_c && a.t_b == b.t_b &&
         a.x_b == b.x_b && a.v_b == b.v_b && a.incoming_start == b.incoming_start &&
         a.incoming_bounce == b.incoming_bounce && a.trace_dt == b.trace_dt &&
         same_traces(a.player_trace, b.player_trace) && same_traces(a.opponent_trace, b.opponent_trace) &&
         same_traces(a.pose_trace, b.pose_trace);
}

// --- database ---------------------------------------------------------------

void ClipDatabase::add(ShotCycleClip clip) {
  if (auto why = clip.check(court_)) throw ValidationError("clip '" + clip.id + "': " + *why);
  if (ids_.count(clip.id)) throw ValidationError("clip '" + clip.id + "': duplicate id");
  if (clip.player_trace.front().y() < 0.0) clip = clip.mirrored_copy();

  auto [it, inserted] = players_.try_emplace(clip.player_id);
  PlayerIndex& pi = it->second;
  if (inserted) pi.hand = clip.handedness;
  else if (pi.hand != clip.handedness)
    throw ValidationError("clip '" + clip.id + "': handedness differs from earlier clips of " + clip.player_id);

  const std::size_t idx = clips_.size();
  ids_.emplace(clip.id, idx);
  pi.all.push_back(idx);
  pi.by_outcome[static_cast<int>(clip.outcome)].push_back(idx);
  by_outcome_[static_cast<int>(clip.outcome)].push_back(idx);
  if (clip.shot_type) {
    pi.by_shot[static_cast<int>(*clip.shot_type)].push_back(idx);
    by_shot_[static_cast<int>(*clip.shot_type)].push_back(idx);
  }
  clips_.push_back(std::move(clip));
}

namespace {
const std::vector<std::size_t> kNone;
}

const std::vector<std::size_t>& ClipDatabase::by_player(const std::string& player) const {
  auto it = players_.find(player);
  return it == players_.end() ? kNone : it->second.all;
}

const std::vector<std::size_t>& ClipDatabase::by_player_shot(const std::string& player, ShotType type) const {
  auto it = players_.find(player);
  return it == players_.end() ? kNone : it->second.by_shot[static_cast<int>(type)];
}

const std::vector<std::size_t>& ClipDatabase::by_player_outcome(const std::string& player, ShotOutcome o) const {
  auto it = players_.find(player);
  return it == players_.end() ? kNone : it->second.by_outcome[static_cast<int>(o)];
}

std::vector<std::string> ClipDatabase::players() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : players_) out.push_back(id);
  return out;
}

std::optional<Handedness> ClipDatabase::handedness(const std::string& player) const {
  auto it = players_.find(player);
  if (it == players_.end()) return std::nullopt;
  return it->second.hand;
}

std::optional<std::size_t> ClipDatabase::find(const std::string& id) const {
  auto it = ids_.find(id);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const ClipDatabase& a, const ClipDatabase& b) {
  return io::to_json(a.court_) == io::to_json(b.court_) && io::to_json(a.params_) == io::to_json(b.params_) &&
         a.clips_ == b.clips_;
}

// --- file format --------------------------------------------------------------

namespace {

constexpr const char* kFormatName = "rallyforge-clips";

json clip_to_json(const ShotCycleClip& c) {
  json j;
  j["id"] = c.id;
  j["player"] = c.player_id;
  j["opponent"] = c.opponent_id;
  j["hand"] = std::string(to_string(c.handedness));
  j["mirrored"] = c.mirrored;
  if (c.t_c) j["t_c"] = *c.t_c;
  j["t_r"] = c.t_r;
  if (c.shot_type) j["shot_type"] = std::string(to_string(*c.shot_type));
  j["outcome"] = std::string(to_string(c.outcome));
  if (c.x_c) j["x_c"] = io::vec_json(*c.x_c);
  if (c.t_b) j["t_b"] = *c.t_b;
  if (c.x_b) j["x_b"] = io::vec_json(*c.x_b);
  if (c.v_b) j["v_b"] = *c.v_b;
  if (c.incoming_start) j["incoming_start"] = io::vec_json(*c.incoming_start);
  if (c.incoming_bounce) j["incoming_bounce"] = io::vec_json(*c.incoming_bounce);
  j["dt"] = c.trace_dt;
  json pt = json::array(), ot = json::array(), poses = json::array();
  for (const auto& p : c.player_trace) pt.push_back(io::vec_json(p));
  for (const auto& p : c.opponent_trace) ot.push_back(io::vec_json(p));
  for (const auto& pose : c.pose_trace) {
    json flat = json::array();
    for (int k = 0; k < kKeypoints; ++k) {
      flat.push_back(pose(k, 0));
      flat.push_back(pose(k, 1));
    }
    poses.push_back(std::move(flat));
  }
  j["player_trace"] = std::move(pt);
  j["opponent_trace"] = std::move(ot);
  j["pose_trace"] = std::move(poses);
  return j;
}

template <typename T, typename Parse>
T enum_field(const std::string& s, Parse parse, const std::string& what) {
  auto v = parse(s);
  if (!v) throw io::SchemaError("unknown " + what + " '" + s + "'");
  return *v;
}

ShotCycleClip clip_from_json(const json& j) {
  ShotCycleClip c;
  io::ObjectReader r(j, "clip");
  std::string hand, outcome;
  std::optional<std::string> shot;
  r.required("id", c.id).required("player", c.player_id).required("opponent", c.opponent_id);
  r.required("hand", hand).optional("mirrored", c.mirrored).required("t_r", c.t_r).required("outcome", outcome);
  r.optional("dt", c.trace_dt);
  c.handedness = enum_field<Handedness>(hand, handedness_from_string, "handedness");
  c.outcome = enum_field<ShotOutcome>(outcome, outcome_from_string, "outcome");
  if (const json* v = r.child("t_c")) c.t_c = v->get<double>();
  if (const json* v = r.child("t_b")) c.t_b = v->get<double>();
  if (const json* v = r.child("v_b")) c.v_b = v->get<double>();
  if (const json* v = r.child("shot_type"))
    c.shot_type = enum_field<ShotType>(v->get<std::string>(), shot_type_from_string, "shot type");
  if (const json* v = r.child("x_c")) c.x_c = io::vec3_from(*v, "x_c");
  if (const json* v = r.child("x_b")) c.x_b = io::vec2_from(*v, "x_b");
  if (const json* v = r.child("incoming_start")) c.incoming_start = io::vec3_from(*v, "incoming_start");
  if (const json* v = r.child("incoming_bounce")) c.incoming_bounce = io::vec2_from(*v, "incoming_bounce");
  auto trace = [&](const char* key, std::vector<Vec2>& out) {
    const json* v = r.child(key);
    if (!v || !v->is_array()) throw io::SchemaError(std::string("missing ") + key);
    for (const auto& p : *v) out.push_back(io::vec2_from(p, key));
  };
  trace("player_trace", c.player_trace);
  trace("opponent_trace", c.opponent_trace);
  const json* poses = r.child("pose_trace");
  if (!poses || !poses->is_array()) throw io::SchemaError("missing pose_trace");
  for (const auto& flat : *poses) {
    if (!flat.is_array() || flat.size() != 2 * kKeypoints)
      throw io::SchemaError("pose needs " + std::to_string(2 * kKeypoints) + " numbers");
    Pose pose;
    for (int k = 0; k < kKeypoints; ++k) pose.row(k) << flat[2 * k].get<double>(), flat[2 * k + 1].get<double>();
    c.pose_trace.push_back(pose);
  }
  r.finish();
  return c;
}

}  // namespace

ClipDatabase read_db(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  // Skip leading blank lines, then expect the header.
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    line.clear();
  }
  if (line.empty()) throw ParseError("clip file has no header line");

  CourtSpec court;
  FlightParams params;
  try {
    const json h = json::parse(line);
    io::ObjectReader r(h, "header");
    std::string format;
    int version = 0;
    r.required("format", format).required("version", version);
    if (format != kFormatName) throw io::SchemaError("header: format must be '" + std::string(kFormatName) + "'");
    if (version != kClipFormatVersion)
      throw io::SchemaError("header: unsupported version " + std::to_string(version));
    if (const json* c = r.child("court")) io::read(*c, court);
    if (const json* f = r.child("flight")) io::read(*f, params);
    r.finish();
    court.validate();
    params.validate();
  } catch (const std::exception& e) {
    throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
  }

  ClipDatabase db(court, params);
  std::vector<std::string> parse_errors, validation_errors;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ShotCycleClip clip;
    try {
      clip = clip_from_json(json::parse(line));
    } catch (const std::exception& e) {
      parse_errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
      continue;
    }
    try {
      db.add(std::move(clip));
    } catch (const ValidationError& e) {
      validation_errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }

  auto summary = [](const std::vector<std::string>& errs, const char* kind) {
    std::ostringstream os;
    os << errs.size() << ' ' << kind << (errs.size() == 1 ? "" : "s");
    for (std::size_t i = 0; i < errs.size() && i < 20; ++i) os << "\n  " << errs[i];
    if (errs.size() > 20) os << "\n  ...";
    return os.str();
  };
  if (!parse_errors.empty()) throw ParseError(summary(parse_errors, "malformed record"), parse_errors.size());
  if (!validation_errors.empty())
    throw ValidationError(summary(validation_errors, "invalid clip"), validation_errors.size());
  return db;
}

ClipDatabase load_db(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open clip file '" + path + "'");
  return read_db(in);
}

void write_db(std::ostream& out, const ClipDatabase& db) {
  json header = {{"format", kFormatName},
                 {"version", kClipFormatVersion},
                 {"court", io::to_json(db.court())},
                 {"flight", io::to_json(db.params())}};
  out << header.dump() << '\n';
  for (const auto& c : db.clips()) out << clip_to_json(c).dump() << '\n';
}

void save_db(const std::string& path, const ClipDatabase& db) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_db(out, db);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_stats(std::ostream& out, const ClipDatabase& db) {
  out << "player,hand";
  for (ShotType t : kAllShotTypes) out << ',' << to_string(t);
  out << ",no_contact,clips,duration_s\n";
  std::array<std::size_t, kShotTypeCount> total_by_shot{};
  std::size_t total_nc = 0, total = 0;
  double total_dur = 0.0;
  for (const auto& p : db.players()) {
    out << p << ',' << to_string(*db.handedness(p));
    for (ShotType t : kAllShotTypes) {
      const std::size_t n = db.by_player_shot(p, t).size();
      total_by_shot[static_cast<int>(t)] += n;
      out << ',' << n;
    }
    const std::size_t nc = db.by_player_outcome(p, ShotOutcome::NoContact).size();
    double dur = 0.0;
    for (std::size_t i : db.by_player(p)) dur += db.clip(i).t_r;
    total_nc += nc;
    total += db.by_player(p).size();
    total_dur += dur;
    out << ',' << nc << ',' << db.by_player(p).size() << ',' << std::fixed << std::setprecision(2) << dur
        << std::defaultfloat << '\n';
  }
  out << "total,";
  for (std::size_t n : total_by_shot) out << ',' << n;
  out << ',' << total_nc << ',' << total << ',' << std::fixed << std::setprecision(2) << total_dur
      << std::defaultfloat << '\n';
}

}  // namespace rallyforge
