// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include "flight_oracle.hpp"
#include "search_oracle.hpp"

#include "rallyforge/batch.hpp"
#include "rallyforge/behavior.hpp"
#include "rallyforge/errors.hpp"
#include "rallyforge/rally.hpp"
#include "rallyforge/synthetic.hpp"
#include "rallyforge/trajectory_fit.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace rallyforge;
using nlohmann::json;

namespace {

// Physics
constexpr double kParabolaTol = 1e-6;        // m over 1 s
constexpr double kOracleTol = 2e-3;          // m over 1 s
constexpr double kFlightMsPerSecond = 1.0;
// Trajectory fit
constexpr int kFitShots = 100;
constexpr int kFitRequired = 98;
constexpr double kFitPosTol = 0.2;   // m
constexpr double kFitTimeTol = 0.03; // s
constexpr double kFitMs = 200.0;
// Spin ordering
constexpr int kSpinLaunches = 50;
// Behavior
constexpr double kMassTol = 1e-3;
constexpr int kBehaviorSamples = 10000;
constexpr double kRejectFraction = 0.1;
// Search
constexpr int kOracleQueries = 50;
constexpr std::size_t kOracleClips = 1000;
constexpr double kSelfReplayTol = 1e-6;
constexpr std::size_t kPerfClips = 10000;
constexpr double kSearchMs = 50.0;
// Rally
constexpr int kRallyPoints = 1000;
constexpr double kContactTol = 1e-9;
constexpr int kCrossRallies = 200;
constexpr double kCrossBias = 0.7;
constexpr double kCrossSeconds = 60.0;

using Clock = std::chrono::steady_clock;
double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass;
  std::string detail;
};

// Two archetypes shared by the rally criteria; alpha is the cross-court player.
struct World {
  ClipDatabase db;
  std::map<std::string, BehaviorModel> models;
  double build_ms = 0.0;
};

const World& world() {
  static const World w = [] {
    const auto t0 = Clock::now();
    ArchetypeSpec a, b;
    a.player_id = "alpha";
    a.cross_court_bias = kCrossBias;
    a.down_line_bias = 1.0 - kCrossBias;
    b.player_id = "beta";
    b.handedness = Handedness::Left;
    b.cross_court_bias = 0.55;
    b.down_line_bias = 0.3;
    b.net_approach_rate = 0.2;
    World out;
    out.db = generate_synthetic_db({a, b}, 300, 3);
    for (const char* id : {"alpha", "beta"}) out.models.emplace(id, BehaviorModel::fit(out.db, id, {}, BinConfig{}));
    out.build_ms = ms_since(t0);
    return out;
  }();
  return w;
}

// --- physics ---------------------------------------------------------------------

LaunchState random_launch(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(-3.0, 3.0), uy(10.5, 13.0), uz(0.4, 2.8), uh(8, 45), uvz(-3, 12),
      us(0, 25), uang(-0.25, 0.25);
  LaunchState l;
  l.origin = Vec3(ux(rng), uy(rng), uz(rng));
  const double a = uang(rng);
  l.heading = Vec2(std::sin(a), -std::cos(a));
  l.v_h = uh(rng);
  l.v_z = uvz(rng);
  l.v_spin = us(rng);
  l.spin_kind = rng() % 2 ? SpinKind::Underspin : SpinKind::Topspin;
  return l;
}

Outcome physics_fidelity() {
  std::mt19937_64 rng(101);
  const CourtSpec court;

  FlightParams vacuum;
  vacuum.drag_coefficient = 0.0;
  double parabola = 0.0;
  for (int i = 0; i < 20; ++i) {
    LaunchState l = random_launch(rng);
    l.v_spin = 0.0;
    l.v_z = std::abs(l.v_z) + 4.0;  // airborne for the whole second
    l.origin.z() = 2.0;
    StopCondition stop;
    stop.max_bounces = 1;
    const BallTrajectory t = simulate_trajectory(l, vacuum, court, stop);
    for (const auto& s : t.samples) {
      if (s.t > 1.0 + 1e-12 || (!t.bounces.empty() && s.t >= t.bounces.front().t)) break;
      const Vec3 want(l.origin.x() + l.heading.x() * l.v_h * s.t, l.origin.y() + l.heading.y() * l.v_h * s.t,
                      l.origin.z() + l.v_z * s.t - 0.5 * vacuum.gravity * s.t * s.t);
      parabola = std::max(parabola, (s.p - want).norm());
    }
  }

  const FlightParams params;
  double worst = 0.0;
  int flights = 0;
  for (int i = 0; i < 30; ++i) {
    const LaunchState l = random_launch(rng);
    const StopCondition stop;
    BallTrajectory t;
    try {
      t = simulate_trajectory(l, params, court, stop);
    } catch (const NeverLands&) {
      continue;
    }
    ++flights;
    std::vector<double> times;
    for (const auto& s : t.samples)
      if (s.t <= 1.0 + 1e-12) times.push_back(s.t);
    const oracle::Result ref = oracle::simulate(l, params, times, t.dt / 10.0L, stop.max_bounces);
    for (std::size_t k = 0; k < times.size(); ++k) worst = std::max(worst, (t.samples[k].p - ref.positions[k]).norm());
  }

  double simulated = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 300; ++i) {
    LaunchState l = random_launch(rng);
    l.v_z = std::abs(l.v_z);
    StopCondition stop;
    stop.max_time = 4.0;
    try {
      simulated += simulate_trajectory(l, params, court, stop).end_time;
    } catch (const NeverLands&) {
    }
  }
  const double per_second = ms_since(t0) / simulated;

  return {parabola < kParabolaTol && worst < kOracleTol && flights >= 20 && per_second < kFlightMsPerSecond,
          fmt("parabola %.2e m (< %.0e); oracle %.2e m over %d flights (< %.0e); %.3f ms per simulated s (< %.0f)",
              parabola, kParabolaTol, worst, flights, kOracleTol, per_second, kFlightMsPerSecond)};
}

// Forward-simulates a random valid groundstroke; returns its two contacts.
std::optional<std::pair<ContactPoint, ContactPoint>> random_shot(std::mt19937_64& rng) {
  const FlightParams params;
  const CourtSpec court;
  std::uniform_real_distribution<double> ux(-3.5, 3.5), uh(15, 40), uz(-1, 9), us(0, 20), ub(11.0, 13.0),
      uheight(0.6, 1.4);
  LaunchState l;
  l.origin = Vec3(ux(rng), ub(rng), uheight(rng));
  const Vec2 target(ux(rng), -ub(rng));
  l.heading = (target - l.origin.head<2>()).normalized();
  l.v_h = uh(rng);
  l.v_z = uz(rng);
  l.v_spin = us(rng);
  l.spin_kind = rng() % 3 == 0 ? SpinKind::Underspin : SpinKind::Topspin;
  StopCondition stop;
  stop.plane_y = target.y();
  BallTrajectory t;
  try {
    t = simulate_trajectory(l, params, court, stop);
  } catch (const NeverLands&) {
    return std::nullopt;
  }
  if (t.end_reason != FlightEnd::ReachedPlane || t.bounces.size() != 1) return std::nullopt;
  if (!t.net_clearance || *t.net_clearance <= 0.05) return std::nullopt;
  if (!in_singles_half(Vec2(t.bounces[0].p.head<2>()), Side::Far, court)) return std::nullopt;
  if (t.end_pos.z() < 0.3 || t.end_pos.z() > 2.5) return std::nullopt;
  return std::make_pair(ContactPoint{l.origin, 0.0}, ContactPoint{t.end_pos, t.end_time});
}

Outcome trajectory_fit() {
  std::mt19937_64 rng(2024);
  const FlightParams params;
  const CourtSpec court;
  const GridSpec grid;
  int good = 0, shots = 0;
  double slowest = 0.0, total_ms = 0.0;
  while (shots < kFitShots) {
    const auto shot = random_shot(rng);
    if (!shot) continue;
    ++shots;
    const auto t0 = Clock::now();
    try {
      const FitResult f = fit_trajectory(shot->first, shot->second, params, court, grid, false);
      const double ms = ms_since(t0);
      slowest = std::max(slowest, ms);
      total_ms += ms;
      const double dpos = (f.trajectory.end_pos - shot->second.pos).norm();
      const double dt = std::abs(shot->first.t + f.trajectory.end_time - shot->second.t);
      if (dpos < kFitPosTol && dt < kFitTimeTol) ++good;
    } catch (const NoFeasibleTrajectory&) {
      slowest = std::max(slowest, ms_since(t0));
    }
  }
  return {good >= kFitRequired && slowest < kFitMs,
          fmt("%d/%d recovered within %.1f m and %.0f ms (need >= %d); slowest fit %.1f ms, mean %.1f ms (< %.0f)",
              good, shots, kFitPosTol, kFitTimeTol * 1e3, kFitRequired, slowest, total_ms / shots, kFitMs)};
}

Outcome spin_ordering() {
  std::mt19937_64 rng(77);
  const FlightParams params;
  const CourtSpec court;
  std::uniform_real_distribution<double> uh(10, 40), uz(1, 10), us(1, 25), uy(10.5, 13.0), uheight(0.4, 2.8);
  int violations = 0;
  for (int i = 0; i < kSpinLaunches; ++i) {
    LaunchState l;
    l.origin = Vec3(0.0, uy(rng), uheight(rng));
    l.v_h = uh(rng);
    l.v_z = uz(rng);
    const double spin = us(rng);
    auto apex = [&](double s, SpinKind k) {
      LaunchState m = l;
      m.v_spin = s;
      m.spin_kind = k;
      StopCondition stop;
      stop.max_bounces = 1;
      double top = 0.0;
      for (const auto& p : simulate_trajectory(m, params, court, stop).samples) top = std::max(top, p.p.z());
      return top;
    };
    const double under = apex(spin, SpinKind::Underspin), flat = apex(0.0, SpinKind::Topspin),
                 top = apex(spin, SpinKind::Topspin);
    if (!(under >= flat && flat >= top)) ++violations;
  }
  return {violations == 0, fmt("%d violations over %d matched launches (need 0)", violations, kSpinLaunches)};
}

// --- behavior --------------------------------------------------------------------

PointStateDescriptor descriptor(const std::array<int, 5>& f) {
  PointStateDescriptor d;
  d.player_region = CourtRegion::from_index(f[0]);
  d.opponent_region = CourtRegion::from_index(6 + f[1]);
  d.ball_start_region = CourtRegion::from_index(6 + f[2]);
  d.ball_bounce_region = CourtRegion::from_index(f[3]);
  d.velocity_bin = f[4];
  return d;
}

// Feature slot of each relaxable feature, by Feature value.
constexpr std::array<int, 4> kSlot = {4, 3, 2, 1};

bool matches(const Observation& o, const std::array<int, 5>& q, const Relaxation& r) {
  if (r.player) return true;
  if (o.features[0] != q[0]) return false;
  for (int f = 0; f < 4; ++f)
    if (!r.relaxes(static_cast<Feature>(f)) && o.features[kSlot[f]] != q[kSlot[f]]) return false;
  return true;
}

double gauss1(const std::vector<double>& s, double x, double h) {
  long double acc = 0.0L;
  for (double p : s) acc += std::exp(-0.5L * (x - p) * (x - p) / (h * h));
  return static_cast<double>(acc / (s.size() * std::sqrt(2.0L * M_PIl) * h));
}

double gauss2(const std::vector<Vec2>& s, const Vec2& x, double h) {
  long double acc = 0.0L;
  for (const Vec2& p : s) acc += std::exp(-0.5L * (x - p).squaredNorm() / (h * h));
  return static_cast<double>(acc / (s.size() * 2.0L * M_PIl * h * h));
}

// Global maximum by a grid over the support's bounding box and pattern search
// from the best grid nodes.
double peak2(const std::vector<Vec2>& s, double h) {
  Vec2 lo = s.front(), hi = s.front();
  for (const auto& p : s) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  const double step = h / 4.0;
  std::vector<std::pair<double, Vec2>> nodes;
  for (double x = lo.x(); x <= hi.x() + step; x += step)
    for (double y = lo.y(); y <= hi.y() + step; y += step) nodes.emplace_back(gauss2(s, Vec2(x, y), h), Vec2(x, y));
  std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(nodes.size(), 8); ++i) {
    Vec2 x = nodes[i].second;
    double f = nodes[i].first;
    for (double d = step; d > 1e-7; d *= 0.5) {
      for (bool moved = true; moved;) {
        moved = false;
        for (const Vec2 dir : {Vec2(d, 0), Vec2(-d, 0), Vec2(0, d), Vec2(0, -d)}) {
          const double g = gauss2(s, x + dir, h);
          if (g > f) f = g, x += dir, moved = true;
        }
      }
    }
    best = std::max(best, f);
  }
  return best;
}

double peak1(const std::vector<double>& s, double h) {
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  double best = 0.0, arg = *lo;
  for (double x = *lo; x <= *hi + 1e-12; x += h / 50.0)
    if (const double g = gauss1(s, x, h); g > best) best = g, arg = x;
  for (double d = h / 50.0; d > 1e-9; d *= 0.5)
    for (bool moved = true; moved;) {
      moved = false;
      for (double dir : {d, -d})
        if (const double g = gauss1(s, arg + dir, h); g > best) best = g, arg += dir, moved = true;
    }
  return best;
}

Outcome behavior_exactness() {
  // Categorical counts on a constructed database: five cells, random shot mixes.
  Rng rng{31};
  const std::array<std::array<int, 5>, 5> cells = {
      {{0, 1, 2, 3, 1}, {2, 2, 2, 2, 2}, {4, 0, 5, 1, 0}, {1, 3, 3, 4, 4}, {5, 5, 0, 0, 3}}};
  const std::array<ShotType, 4> types = {ShotType::ForehandTopspin, ShotType::BackhandTopspin,
                                         ShotType::ForehandUnderspin, ShotType::BackhandVolley};
  std::vector<Observation> obs;
  for (int i = 0; i < 400; ++i) {
    Observation o;
    o.features = cells[rng.index(cells.size())];
    o.clip_id = "c" + std::to_string(i);
    o.shot = types[rng.index(types.size())];
    o.v_b = rng.uniform(12.0, 30.0);
    o.x_b = Vec2(rng.uniform(-4.0, 4.0), rng.uniform(-11.5, -2.0));
    o.placement_region = region_of(o.x_b, CourtSpec{}).local_index();
    obs.push_back(o);
  }
  const BehaviorModel constructed =
      BehaviorModel::from_observations("p", obs, BinConfig{}, KdeConfig{}, Bandwidths{0.6, 1.2, 0.6});
  int cat_checked = 0, cat_bad = 0;
  auto check_counts = [&](const std::array<int, 5>& q) {
    const auto [g, r] = constructed.lookup_shot(descriptor(q));
    std::array<long, kShotTypeCount> ref{};
    long n = 0;
    for (const auto& o : obs)
      if (matches(o, q, r)) ++ref[static_cast<int>(o.shot)], ++n;
    ++cat_checked;
    const long members = static_cast<long>(g->members.size());
    bool ok = members == n;
    // p(t) = counts/members equals ref/n as a rational: cross-multiplied integers.
    for (int t = 0; t < kShotTypeCount; ++t) ok = ok && static_cast<long>(g->counts[t]) * n == ref[t] * members;
    if (!ok) ++cat_bad;
  };
  for (const auto& c : cells) check_counts(c);
  check_counts({0, 1, 2, 3, 4});  // relaxed lookups pool neighbouring cells
  check_counts({2, 2, 5, 2, 2});
  check_counts({1, 0, 0, 0, 0});

  // Numerical mass of the fitted densities.
  const World& w = world();
  const BehaviorModel& m = w.models.at("alpha");
  const Bandwidths& bw = m.bandwidths();
  double mass_err = 0.0;
  int densities = 0;
  for (const auto& [key, g] : m.exact_cells()) {
    if (densities >= 12) break;
    for (ShotType t : kAllShotTypes) {
      const auto& pl = g.placement[static_cast<int>(t)].support;
      const auto& vl = g.velocity[static_cast<int>(t)].support;
      if (pl.size() < 2) continue;
      Vec2 lo = pl.front(), hi = pl.front();
      for (const auto& p : pl) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
      const double pad = 7.0 * bw.placement, dx = bw.placement / 12.0;
      double mass = 0.0;
      for (double x = lo.x() - pad; x <= hi.x() + pad; x += dx)
        for (double y = lo.y() - pad; y <= hi.y() + pad; y += dx) mass += m.placement_density(g, t, Vec2(x, y)) * dx * dx;
      mass_err = std::max(mass_err, std::abs(mass - 1.0));
      const auto [vlo, vhi] = std::minmax_element(vl.begin(), vl.end());
      const double vpad = 8.0 * bw.velocity, dv = bw.velocity / 40.0;
      double vmass = 0.0;
      for (double v = *vlo - vpad; v <= *vhi + vpad; v += dv) vmass += m.velocity_density(g, t, v) * dv;
      mass_err = std::max(mass_err, std::abs(vmass - 1.0));
      densities += 2;
    }
  }

  // Rejection floor: every sample against an independently computed peak.
  std::vector<std::array<int, 5>> queries;
  for (std::size_t i = 0; i < m.observations().size() && queries.size() < 40; i += 17)
    queries.push_back(m.observations()[i].features);
  std::map<std::pair<std::string, int>, std::pair<double, double>> peaks;  // (query, shot) -> (placement, velocity)
  int violations = 0;
  Rng srng{2718};
  for (int i = 0; i < kBehaviorSamples; ++i) {
    const auto& q = queries[static_cast<std::size_t>(i) % queries.size()];
    const ShotSelection s = m.sample_shot_selection(descriptor(q), srng);
    std::vector<Vec2> pl;
    std::vector<double> vl;
    for (const auto& o : m.observations())
      if (o.shot == s.shot && matches(o, q, s.relaxation)) pl.push_back(o.x_b), vl.push_back(o.v_b);
    if (pl.empty()) {
      ++violations;
      continue;
    }
    std::ostringstream key;
    for (int f : q) key << f << ',';
    key << s.relaxation.mask << s.relaxation.player;
    auto it = peaks.find({key.str(), static_cast<int>(s.shot)});
    if (it == peaks.end())
      it = peaks.emplace(std::make_pair(key.str(), static_cast<int>(s.shot)),
                         std::make_pair(peak2(pl, bw.placement), peak1(vl, bw.velocity))).first;
    const double floor_tol = 1.0 - 1e-9;
    if (gauss2(pl, s.placement, bw.placement) < kRejectFraction * it->second.first * floor_tol) ++violations;
    if (gauss1(vl, s.velocity, bw.velocity) < kRejectFraction * it->second.second * floor_tol) ++violations;
  }

  return {cat_bad == 0 && mass_err <= kMassTol && densities > 0 && violations == 0,
          fmt("categorical %d/%d cells exact; KDE mass max |1 - m| = %.2e over %d densities (<= %.0e); "
              "%d of %d samples below %.1f x peak (need 0)",
              cat_checked - cat_bad, cat_checked, mass_err, densities, kMassTol, violations, kBehaviorSamples,
              kRejectFraction)};
}

Outcome marginalization_ladder() {
  const std::array<int, 5> q = {2, 2, 2, 2, 2};
  // One populated cell per single-feature relaxation, most important feature first.
  const std::array<std::array<int, 5>, 4> single = {
      {{2, 5, 2, 2, 2}, {2, 2, 5, 2, 2}, {2, 2, 2, 5, 2}, {2, 2, 2, 2, 4}}};
  const std::array<Feature, 4> expect = {Feature::Opponent, Feature::BallStart, Feature::BallBounce, Feature::Velocity};
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < single.size(); ++i) {
    Observation o;
    o.clip_id = "cell" + std::to_string(i);
    o.features = single[i];
    o.x_b = Vec2(1.0, -10.0);
    o.v_b = 20.0;
    obs.push_back(o);
  }
  int ok = 0;
  std::string order;
  for (int peel = 3; peel >= 0; --peel) {
    const BehaviorModel m = BehaviorModel::from_observations("p", obs, BinConfig{}, KdeConfig{}, Bandwidths{});
    const auto [g, r] = m.lookup_shot(descriptor(q));
    const bool good = r.k() == 1 && r.relaxes(expect[peel]) && g->members.size() == 1 &&
                      m.observations()[g->members[0]].features == single[peel];
    ok += good;
    order += std::string(order.empty() ? "" : " > ") + std::string(to_string(expect[peel])) + (good ? "" : "(wrong)");
    obs.pop_back();
  }
  return {ok == 4, fmt("%d/4 single-feature relaxations at k=1 in order %s", ok, order.c_str())};
}

// --- search ----------------------------------------------------------------------

ClipDatabase alpha_only(const ClipDatabase& src, std::size_t n) {
  ClipDatabase out(src.court(), src.params());
  const auto& pool = src.by_player("alpha");
  for (std::size_t i = 0; out.size() < n; ++i) {
    ShotCycleClip c = src.clip(pool[i % pool.size()]);
    if (i >= pool.size()) c.id += "-r" + std::to_string(i / pool.size());
    out.add(std::move(c));
  }
  return out;
}

Outcome search_equivalence() {
  const ClipDatabase db = alpha_only(world().db, kOracleClips);
  Rng rng{99};
  std::vector<BallTrajectory> balls;
  balls.reserve(kOracleQueries);
  int match = 0, reachable = 0;
  for (int i = 0; i < kOracleQueries; ++i) {
    SearchQuery q = search_oracle::random_query(db, rng, balls);
    q.incoming = &balls.back();
    q.filter = i % 3 == 0 ? OutcomeFilter::ContactAny : OutcomeFilter::MustContinue;
    const SearchResult r = search(db, "alpha", q);
    const auto want = search_oracle::reference_search(db, "alpha", q);
    reachable += want.has_value();
    if (r.reachable == want.has_value() && (!want || db.clip(*r.clip).id == db.clip(*want).id)) ++match;
  }

  ClipDatabase with_self = db;
  const BallTrajectory ball = search_oracle::default_ball();
  const ShotCycleClip self = search_oracle::exact_clip(ball, "self-replay", Vec2(-1.0, 12.5), Vec2(0.2, 12.6));
  with_self.add(self);
  const SearchResult r = search(with_self, "alpha", search_oracle::replay_query(self, ball));
  const bool self_won = r.reachable && with_self.clip(*r.clip).id == "self-replay";
  const double self_cost = r.reachable ? r.cost.total : INFINITY;

  return {match == kOracleQueries && reachable > 0 && self_won && self_cost < kSelfReplayTol,
          fmt("%d/%d argmin ids match brute force (%d reachable) over %zu clips; self-replay %s, cost %.2e (< %.0e)",
              match, kOracleQueries, reachable, db.size(), self_won ? "selected" : "NOT selected", self_cost,
              kSelfReplayTol)};
}

Outcome search_performance() {
  const ClipDatabase db = alpha_only(world().db, kPerfClips);
  Rng rng{4242};
  std::vector<BallTrajectory> balls;
  balls.reserve(32);
  double slowest = 0.0, sum = 0.0;
  std::size_t candidates = 0;
  const int n = 20;
  for (int i = -1; i < n; ++i) {
    SearchQuery q = search_oracle::random_query(db, rng, balls);
    q.incoming = &balls.back();
    q.filter = OutcomeFilter::ContactAny;
    const auto t0 = Clock::now();
    const SearchResult r = search(db, "alpha", q);
    const double ms = ms_since(t0);
    if (i < 0) continue;  // warm-up
    slowest = std::max(slowest, ms);
    sum += ms;
    candidates = std::max(candidates, r.candidates);
  }
  return {slowest < kSearchMs, fmt("%zu clips, up to %zu scored per query: slowest %.2f ms, mean %.2f ms (< %.0f)",
                                   db.size(), candidates, slowest, sum / n, kSearchMs)};
}

// --- rally -----------------------------------------------------------------------

Vec2 xy(const json& j) { return Vec2(j[0].get<double>(), j[1].get<double>()); }

Outcome rally_invariants() {
  const World& w = world();
  const std::array<const BehaviorModel*, 2> models = {&w.models.at("alpha"), &w.models.at("beta")};
  const std::array<std::string, 2> ids = {"alpha", "beta"};
  int alternation = 0, ending = 0, contact = 0, replay = 0, contacts = 0;
  double worst_contact = 0.0;
  std::map<std::string, int> reasons;
  for (int p = 0; p < kRallyPoints; ++p) {
    const int server = (p / 2) % 2;
    Rally r(w.db, models, ids, server, p, 8, RallyConfig{});
    r.run();
    const auto& ev = r.events();
    // Turn order: serve, then receiver and server strictly alternating.
    bool alt = !ev.empty() && ev.front()["event"] == "serve" && ev.front()["player"] == ids[server];
    int shot = 0;
    for (const auto& e : ev) {
      if (e["event"] != "shot_cycle") continue;
      ++shot;
      const int expected = shot % 2 == 1 ? 1 - server : server;
      alt = alt && e["player"] == ids[expected] && e["shot"] == shot;
      if (e["outcome"] == "no_contact") continue;
      // Racket rebuilt from the clip annotation and the logged corrections.
      const auto idx = w.db.find(e["clip"].get<std::string>());
      if (!idx) {
        ++contact;
        continue;
      }
      const ShotCycleClip& c = w.db.clip(*idx);
      const Vec2 local = c.x_c->head<2>() + xy(e["corrections"]["offset"]) + xy(e["corrections"]["e_c"]);
      const Vec2 racket = expected == 0 ? local : Vec2(-local);
      const double err = (racket - xy(e["ball_at_contact"])).norm();
      worst_contact = std::max(worst_contact, err);
      ++contacts;
      if (!(err <= kContactTol)) ++contact;
    }
    if (!alt) ++alternation;
    const std::string reason = ev.back()["event"] == "point_end" ? ev.back()["reason"].get<std::string>() : "";
    ++reasons[reason];
    if (!r.ended() || (reason != "error" && reason != "unreachable" && reason != "truncated")) ++ending;

    Rally again(w.db, models, ids, server, p, 8, RallyConfig{});
    again.run();
    if (again.log_text() != r.log_text()) ++replay;
  }
  std::string mix;
  for (const auto& [k, v] : reasons) mix += (mix.empty() ? "" : ", ") + k + " " + std::to_string(v);
  return {alternation == 0 && ending == 0 && contact == 0 && replay == 0 && contacts > 0,
          fmt("%d points (%s): alternation %d, ending %d, contact %d (worst %.1e m over %d contacts, <= %.0e), "
              "replay %d violations (need 0)",
              kRallyPoints, mix.c_str(), alternation, ending, contact, worst_contact, contacts, kContactTol, replay)};
}

Outcome emergent_cross_court() {
  const auto t0 = Clock::now();
  const World& w = world();
  BatchOptions opt;
  opt.players = {"alpha", "beta"};
  opt.points = kCrossRallies;
  opt.seed = 2025;
  opt.threads = 1;
  const auto points = run_batch(w.db, {&w.models.at("alpha"), &w.models.at("beta")}, opt);
  const BatchSummary s = summarize(points, w.db.court());
  const double batch_s = ms_since(t0) / 1e3;
  const PlayerSummary& a = s.players.at("alpha");
  const double sigma = std::sqrt(kCrossBias * (1.0 - kCrossBias) / std::max(a.groundstrokes, 1));
  const double f = a.cross_court_fraction;
  return {a.groundstrokes > 0 && std::abs(f - kCrossBias) <= 3.0 * sigma && batch_s < kCrossSeconds,
          fmt("cross-court %.3f over %d groundstrokes, bounds %.3f..%.3f (0.7 +- 3 sigma); %d rallies in %.1f s "
              "(< %.0f; database and models built in %.1f s beforehand)",
              f, a.groundstrokes, kCrossBias - 3 * sigma, kCrossBias + 3 * sigma, kCrossRallies, batch_s,
              kCrossSeconds, w.build_ms / 1e3)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"physics fidelity", physics_fidelity},
      {"trajectory fit round trip", trajectory_fit},
      {"spin ordering", spin_ordering},
      {"behavior model exactness", behavior_exactness},
      {"marginalization ladder", marginalization_ladder},
      {"clip search oracle equivalence", search_equivalence},
      {"search performance", search_performance},
      {"rally invariants", rally_invariants},
      {"emergent cross-court statistics", emergent_cross_court},
  };
  int passed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    passed += o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << "acceptance: " << passed << "/" << criteria.size() << " criteria passed" << std::endl;
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
