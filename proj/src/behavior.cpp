#include "rallyforge/behavior.hpp"

#include "rallyforge/errors.hpp"
#include "rallyforge/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>

namespace rallyforge {

using io::json;

int PointStateDescriptor::cell(const BinConfig& bins) const {
  const auto f = features();
  return (((f[0] * 6 + f[1]) * 6 + f[2]) * 6 + f[3]) * bins.velocity_bins + f[4];
}

std::string_view to_string(Feature f) {
  switch (f) {
    case Feature::Velocity: return "velocity";
    case Feature::BallBounce: return "ball_bounce";
    case Feature::BallStart: return "ball_start";
    case Feature::Opponent: return "opponent";
  }
  return "?";
}

std::string Relaxation::describe() const {
  std::string s;
  for (int r = 0; r < 4; ++r) {
    if (!(mask >> r & 1)) continue;
    if (!s.empty()) s += '+';
    s += to_string(static_cast<Feature>(r));
  }
  if (placement) s += s.empty() ? "placement" : "+placement";
  if (player) s += s.empty() ? "player" : "+player";
  return s.empty() ? "none" : s;
}

const std::array<std::uint8_t, 16>& relaxation_order() {
  static const std::array<std::uint8_t, 16> order = [] {
    std::array<std::uint8_t, 16> o{};
    for (int m = 0; m < 16; ++m) o[m] = static_cast<std::uint8_t>(m);
    auto ranks = [](int m) {
      std::vector<int> r;
      for (int b = 0; b < 4; ++b)
        if (m >> b & 1) r.push_back(b);
      return r;
    };
    std::sort(o.begin(), o.end(), [&](int a, int b) {
      const auto ra = ranks(a), rb = ranks(b);
      if (ra.size() != rb.size()) return ra.size() < rb.size();
      return ra < rb;
    });
    return o;
  }();
  return order;
}

// --- descriptors ------------------------------------------------------------------

DescriptorEstimate build_descriptor(const BallTrajectory& incoming, double now, const Vec2& player_pos,
                                    const Vec2& opponent_recovery, const CourtSpec& court, const BinConfig& bins) {
  const Intercept ic = intercept(incoming, player_pos.y());
  DescriptorEstimate e;
  e.contact_time = ic.t;
  e.contact = ic.p;
  const Vec2 contact_xy = ic.p.head<2>();
  const double remaining = ic.t - now;
  e.reach_velocity = remaining > 0.0 ? (contact_xy - player_pos).norm() / remaining
                                     : std::numeric_limits<double>::infinity();
  e.descriptor.player_region = region_of(contact_xy, court);
  e.descriptor.opponent_region = region_of(opponent_recovery, court);
  e.descriptor.ball_start_region = region_of(incoming.launch.origin, court);
  const auto bounce = incoming.bounce_pos();
  e.descriptor.ball_bounce_region = region_of(bounce ? Vec2(bounce->head<2>()) : contact_xy, court);
  e.descriptor.velocity_bin = velocity_bin(e.reach_velocity, bins);
  return e;
}

PointStateDescriptor clip_descriptor(const ShotCycleClip& clip, const CourtSpec& court, const BinConfig& bins) {
  if (!clip.has_contact() || !clip.incoming_start || !clip.incoming_bounce)
    throw std::invalid_argument("clip " + clip.id + " lacks contact or incoming-ball annotations");
  PointStateDescriptor d;
  const Vec2 contact = clip.x_c->head<2>();
  d.player_region = region_of(contact, court);
  d.opponent_region = region_of(clip.opponent_at(*clip.t_c), court);
  d.ball_start_region = region_of(*clip.incoming_start, court);
  d.ball_bounce_region = region_of(*clip.incoming_bounce, court);
  d.velocity_bin = velocity_bin((contact - clip.player_at(0.0)).norm() / *clip.t_c, bins);
  return d;
}

// --- KDE ------------------------------------------------------------------------------

double kde_density(const std::vector<double>& support, double x, double h) {
  if (support.empty()) return 0.0;
  const double norm = 1.0 / (std::sqrt(2.0 * M_PI) * h);
  double s = 0.0;
  for (double xi : support) {
    const double u = (x - xi) / h;
    s += std::exp(-0.5 * u * u);
  }
  return norm * s / static_cast<double>(support.size());
}

double kde_density(const std::vector<Vec2>& support, const Vec2& x, double h) {
  if (support.empty()) return 0.0;
  const double inv2h2 = 1.0 / (2.0 * h * h);
  double s = 0.0;
  for (const Vec2& xi : support) s += std::exp(-(x - xi).squaredNorm() * inv2h2);
  return s / (2.0 * M_PI * h * h * static_cast<double>(support.size()));
}

namespace {

template <typename T, typename Dist2>
double loo_impl(const std::vector<T>& s, double h, int dim, Dist2 dist2) {
  const std::size_t n = s.size();
  if (n < 2) return 0.0;
  const double log_norm = -0.5 * dim * std::log(2.0 * M_PI * h * h) - std::log(static_cast<double>(n - 1));
  double ll = 0.0;
  std::vector<double> e;
  e.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    // Log-sum-exp: isolated points would otherwise underflow to zero density.
    e.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) e.push_back(-0.5 * dist2(s[i], s[j]) / (h * h));
    const double m = *std::max_element(e.begin(), e.end());
    double acc = 0.0;
    for (double v : e) acc += std::exp(v - m);
    ll += log_norm + m + std::log(acc);
  }
  return ll;
}

}  // namespace

double loo_log_likelihood(const std::vector<double>& support, double h) {
  return loo_impl(support, h, 1, [](double a, double b) { return (a - b) * (a - b); });
}

double loo_log_likelihood(const std::vector<Vec2>& support, double h) {
  return loo_impl(support, h, 2, [](const Vec2& a, const Vec2& b) { return (a - b).squaredNorm(); });
}

void KdeConfig::validate() const {
  if (position_grid.empty() || velocity_grid.empty()) throw std::invalid_argument("kde: bandwidth grids must not be empty");
  for (double h : position_grid)
    if (!(h > 0.0)) throw std::invalid_argument("kde: bandwidths must be positive");
  for (double h : velocity_grid)
    if (!(h > 0.0)) throw std::invalid_argument("kde: bandwidths must be positive");
  if (!(reject_fraction >= 0.0 && reject_fraction < 1.0)) throw std::invalid_argument("kde: reject_fraction in [0, 1)");
  if (max_attempts < 1) throw std::invalid_argument("kde: max_attempts must be >= 1");
}

// --- model ------------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kWild = 63;

// Feature slot relaxed by each rank: velocity, bounce, start, opponent.
constexpr std::array<int, 4> kRankSlot = {4, 3, 2, 1};

std::uint64_t masked_key(const std::array<int, 5>& f, std::uint8_t mask) {
  std::array<std::uint64_t, 5> v;
  for (int i = 0; i < 5; ++i) v[i] = static_cast<std::uint64_t>(f[i]);
  for (int r = 0; r < 4; ++r)
    if (mask >> r & 1) v[kRankSlot[r]] = kWild;
  return v[0] | v[1] << 6 | v[2] << 12 | v[3] << 18 | v[4] << 24;
}

std::uint64_t recovery_key(const std::array<int, 5>& f, std::uint8_t mask, std::optional<int> placement) {
  const std::uint64_t p = placement ? static_cast<std::uint64_t>(*placement) : kWild;
  return masked_key(f, mask) | p << 30;
}

double sq_dist(double a, double b) { return (a - b) * (a - b); }
double sq_dist(const Vec2& a, const Vec2& b) { return (a - b).squaredNorm(); }

// Gaussian mean-shift climbs monotonically to a local maximum of the estimate.
template <typename T>
T climb(const std::vector<T>& s, T x, double h) {
  const double inv = 1.0 / (2.0 * h * h);
  for (int it = 0; it < 100; ++it) {
    double wsum = 0.0;
    T acc = x * 0.0;
    for (const T& p : s) {
      const double w = std::exp(-sq_dist(x, p) * inv);
      wsum += w;
      acc = acc + w * p;
    }
    if (!(wsum > 0.0)) break;
    const T next = acc / wsum;
    const double step = sq_dist(next, x);
    x = next;
    if (step < 1e-18 * h * h) break;
  }
  return x;
}

// Global maximum: climb from the densest support points (all of them for small supports).
template <typename T>
std::pair<double, T> peak_and_mode(const std::vector<T>& s, double h) {
  constexpr std::size_t kAllBelow = 200, kStarts = 48;
  std::vector<std::pair<double, std::size_t>> start;
  start.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) start.emplace_back(kde_density(s, s[i], h), i);
  if (s.size() > kAllBelow) {
    std::partial_sort(start.begin(), start.begin() + kStarts, start.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    start.resize(kStarts);
  }
  double best = -1.0;
  T mode = s.front();
  for (const auto& [d0, i] : start) {
    T x = climb(s, s[i], h);
    double d = kde_density(s, x, h);
    if (d < d0) {
      x = s[i];
      d = d0;
    }
    if (d > best) {
      best = d;
      mode = x;
    }
  }
  return {best, mode};
}

template <typename D>
void finalize(D& d, double h) {
  if (d.support.empty()) return;
  std::tie(d.peak, d.mode) = peak_and_mode(d.support, h);
}

template <typename T>
double pooled_choice(const std::vector<double>& grid, const std::vector<std::vector<T>>& groups, double fallback) {
  bool any = false;
  double best_h = fallback, best_ll = -std::numeric_limits<double>::infinity();
  for (double h : grid) {
    double ll = 0.0;
    for (const auto& g : groups) {
      if (g.size() < 2) continue;
      any = true;
      ll += loo_log_likelihood(g, h);
    }
    if (ll > best_ll) {
      best_ll = ll;
      best_h = h;
    }
  }
  return any ? best_h : fallback;
}

Vec2 draw_position(const BehaviorModel::Density2& d, double h, const KdeConfig& kde, Rng& rng) {
  const double floor = kde.reject_fraction * d.peak;
  for (int a = 0; a < kde.max_attempts; ++a) {
    const Vec2& c = d.support[rng.index(d.support.size())];
    const Vec2 x(c.x() + h * rng.normal(), c.y() + h * rng.normal());
    if (kde_density(d.support, x, h) >= floor) return x;
  }
  return d.mode;
}

double draw_velocity(const BehaviorModel::Density1& d, double h, const KdeConfig& kde, Rng& rng) {
  const double floor = kde.reject_fraction * d.peak;
  for (int a = 0; a < kde.max_attempts; ++a) {
    const double x = d.support[rng.index(d.support.size())] + h * rng.normal();
    if (x > 0.0 && kde_density(d.support, x, h) >= floor) return x;
  }
  return d.mode;
}

}  // namespace

BehaviorModel BehaviorModel::fit(const ClipDatabase& db, const std::string& player, const OpponentFilter& filter,
                                 const BinConfig& bins, const KdeConfig& kde) {
  bins.validate();
  kde.validate();
  std::vector<Observation> obs;
  for (std::size_t i : db.by_player(player)) {
    const ShotCycleClip& c = db.clip(i);
    if (!c.has_contact() || c.shot_type == ShotType::Serve || !c.x_b || !c.incoming_start) continue;
    if (filter.opponent && c.opponent_id != *filter.opponent) continue;
    if (filter.opponent_hand && db.handedness(c.opponent_id) != filter.opponent_hand) continue;
    Observation o;
    o.clip_id = c.id;
    o.features = clip_descriptor(c, db.court(), bins).features();
    o.shot = *c.shot_type;
    o.v_b = *c.v_b;
    o.x_b = *c.x_b;
    o.placement_region = region_of(*c.x_b, db.court()).local_index();
    o.has_recovery = c.outcome == ShotOutcome::InPlay;
    if (o.has_recovery) o.x_r = c.recovery_position();
    obs.push_back(std::move(o));
  }
  if (obs.empty()) throw InsufficientData("no return shots for player '" + player + "' after the opponent filter");

  // Pooled leave-one-out over exact cells.
  std::map<std::pair<std::uint64_t, int>, std::vector<Vec2>> place;
  std::map<std::pair<std::uint64_t, int>, std::vector<double>> velo;
  std::map<std::pair<std::uint64_t, bool>, std::vector<Vec2>> recov;
  const CourtSpec court = db.court();
  for (const auto& o : obs) {
    const std::uint64_t key = masked_key(o.features, 0);
    place[{key, static_cast<int>(o.shot)}].push_back(o.x_b);
    velo[{key, static_cast<int>(o.shot)}].push_back(o.v_b);
    if (o.has_recovery)
      recov[{recovery_key(o.features, 0, o.placement_region), is_front(o.x_r, court)}].push_back(o.x_r);
  }
  auto values = [](const auto& m) {
    std::vector<typename std::decay_t<decltype(m)>::mapped_type> v;
    for (const auto& [k, g] : m) v.push_back(g);
    return v;
  };
  Bandwidths bw;
  bw.placement = pooled_choice(kde.position_grid, values(place), bw.placement);
  bw.velocity = pooled_choice(kde.velocity_grid, values(velo), bw.velocity);
  bw.recovery = pooled_choice(kde.position_grid, values(recov), bw.recovery);

  return from_observations(player, std::move(obs), bins, kde, bw, court);
}

BehaviorModel BehaviorModel::from_observations(std::string player, std::vector<Observation> obs,
                                               const BinConfig& bins, const KdeConfig& kde, const Bandwidths& bw,
                                               const CourtSpec& court) {
  BehaviorModel m;
  m.front_boundary_ = court.depth_boundary();
  m.player_ = std::move(player);
  m.obs_ = std::move(obs);
  m.bins_ = bins;
  m.kde_ = kde;
  m.bw_ = bw;
  m.build();
  return m;
}

void BehaviorModel::build() {
  for (auto& level : shot_levels_) level.clear();
  for (auto& level : recovery_levels_) level.clear();
  pool_ = ShotGroup{};
  recovery_pool_ = RecoveryGroup{};

  auto add_shot = [&](ShotGroup& g, std::uint32_t i) {
    const Observation& o = obs_[i];
    const int t = static_cast<int>(o.shot);
    g.members.push_back(i);
    ++g.counts[t];
    g.velocity[t].support.push_back(o.v_b);
    g.placement[t].support.push_back(o.x_b);
  };
  auto add_recovery = [&](RecoveryGroup& g, std::uint32_t i) {
    const Observation& o = obs_[i];
    const bool front = std::abs(o.x_r.y()) < front_boundary_;
    g.members.push_back(i);
    g.front += front ? 1 : 0;
    g.position[front ? 1 : 0].support.push_back(o.x_r);
  };

  for (std::uint32_t i = 0; i < obs_.size(); ++i) {
    const Observation& o = obs_[i];
    for (std::uint8_t mask = 0; mask < 16; ++mask) add_shot(shot_levels_[mask][masked_key(o.features, mask)], i);
    add_shot(pool_, i);
    if (!o.has_recovery) continue;
    for (std::uint8_t mask = 0; mask < 16; ++mask)
      add_recovery(recovery_levels_[mask][recovery_key(o.features, mask, o.placement_region)], i);
    add_recovery(recovery_levels_[16][recovery_key(o.features, 15, std::nullopt)], i);
    add_recovery(recovery_pool_, i);
  }

  auto finish_shot = [&](ShotGroup& g) {
    for (int t = 0; t < kShotTypeCount; ++t) {
      finalize(g.velocity[t], bw_.velocity);
      finalize(g.placement[t], bw_.placement);
    }
  };
  auto finish_recovery = [&](RecoveryGroup& g) {
    for (auto& d : g.position) finalize(d, bw_.recovery);
  };
  for (auto& level : shot_levels_)
    for (auto& [k, g] : level) finish_shot(g);
  for (auto& level : recovery_levels_)
    for (auto& [k, g] : level) finish_recovery(g);
  finish_shot(pool_);
  finish_recovery(recovery_pool_);
}

std::pair<const BehaviorModel::ShotGroup*, Relaxation> BehaviorModel::lookup_shot(
    const PointStateDescriptor& d) const {
  const auto f = d.features();
  for (std::uint8_t mask : relaxation_order()) {
    const auto& level = shot_levels_[mask];
    if (auto it = level.find(masked_key(f, mask)); it != level.end()) return {&it->second, Relaxation{mask}};
  }
  throw NoData("no clips of '" + player_ + "' from player region " + std::to_string(f[0]));
}

std::pair<const BehaviorModel::RecoveryGroup*, Relaxation> BehaviorModel::lookup_recovery(
    const PointStateDescriptor& d, int placement_region) const {
  const auto f = d.features();
  for (std::uint8_t mask : relaxation_order()) {
    const auto& level = recovery_levels_[mask];
    if (auto it = level.find(recovery_key(f, mask, placement_region)); it != level.end())
      return {&it->second, Relaxation{mask}};
  }
  const auto& last = recovery_levels_[16];
  if (auto it = last.find(recovery_key(f, 15, std::nullopt)); it != last.end())
    return {&it->second, Relaxation{15, true}};
  throw NoData("no recoveries of '" + player_ + "' from player region " + std::to_string(f[0]));
}

ShotSelection BehaviorModel::sample_shot_selection(const PointStateDescriptor& d, Rng& rng) const {
  const ShotGroup* g = nullptr;
  ShotSelection s;
  try {
    std::tie(g, s.relaxation) = lookup_shot(d);
  } catch (const NoData&) {
    if (pool_.members.empty()) throw;
    g = &pool_;
    s.relaxation = Relaxation{15, false, true};
  }
  const auto total = static_cast<std::uint32_t>(g->members.size());
  auto pick = static_cast<std::uint32_t>(rng.index(total));
  int t = 0;
  while (pick >= g->counts[t]) pick -= g->counts[t++];
  s.shot = static_cast<ShotType>(t);
  s.velocity = draw_velocity(g->velocity[t], bw_.velocity, kde_, rng);
  s.placement = draw_position(g->placement[t], bw_.placement, kde_, rng);
  return s;
}

RecoveryDecision BehaviorModel::recovery_target(const PointStateDescriptor& d, int placement_region,
                                                Rng& rng) const {
  const RecoveryGroup* g = nullptr;
  RecoveryDecision r;
  try {
    std::tie(g, r.relaxation) = lookup_recovery(d, placement_region);
  } catch (const NoData&) {
    if (recovery_pool_.members.empty()) throw;
    g = &recovery_pool_;
    r.relaxation = Relaxation{15, true, true};
  }
  const double n = static_cast<double>(g->members.size());
  r.p_approach = g->front / n;
  r.approach_net = rng.uniform() < r.p_approach;
  r.position = g->position[r.approach_net ? 1 : 0].mode;
  return r;
}

// --- persistence ------------------------------------------------------------------------

namespace {
constexpr const char* kModelFormat = "rallyforge-model";
constexpr int kModelVersion = 1;
}  // namespace

void BehaviorModel::write(std::ostream& out) const {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["player"] = player_;
  j["bins"] = io::to_json(bins_);
  j["front_boundary"] = front_boundary_;
  j["kde"] = {{"position_grid", kde_.position_grid},
              {"velocity_grid", kde_.velocity_grid},
              {"reject_fraction", kde_.reject_fraction},
              {"max_attempts", kde_.max_attempts}};
  j["bandwidths"] = {{"placement", bw_.placement}, {"velocity", bw_.velocity}, {"recovery", bw_.recovery}};
  json arr = json::array();
  for (const auto& o : obs_) {
    json r = {{"clip", o.clip_id},
              {"features", o.features},
              {"shot", std::string(to_string(o.shot))},
              {"v_b", o.v_b},
              {"x_b", io::vec_json(o.x_b)},
              {"placement_region", o.placement_region}};
    if (o.has_recovery) r["x_r"] = io::vec_json(o.x_r);
    arr.push_back(std::move(r));
  }
  j["observations"] = std::move(arr);
  out << j.dump() << '\n';
}

BehaviorModel BehaviorModel::read(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  try {
    io::ObjectReader r(j, "model");
    std::string format;
    int version = 0;
    BehaviorModel m;
    r.required("format", format).required("version", version).required("player", m.player_);
    if (format != kModelFormat) throw io::SchemaError("model: format must be '" + std::string(kModelFormat) + "'");
    if (version != kModelVersion) throw io::SchemaError("model: unsupported version " + std::to_string(version));
    r.required("front_boundary", m.front_boundary_);
    if (const json* b = r.child("bins")) io::read(*b, m.bins_);
    if (const json* k = r.child("kde")) {
      io::ObjectReader kr(*k, "model.kde");
      kr.optional("position_grid", m.kde_.position_grid)
          .optional("velocity_grid", m.kde_.velocity_grid)
          .optional("reject_fraction", m.kde_.reject_fraction)
          .optional("max_attempts", m.kde_.max_attempts);
      kr.finish();
    }
    const json* bw = r.child("bandwidths");
    if (!bw) throw io::SchemaError("model: missing bandwidths");
    io::ObjectReader br(*bw, "model.bandwidths");
    br.required("placement", m.bw_.placement).required("velocity", m.bw_.velocity).required("recovery", m.bw_.recovery);
    br.finish();
    const json* arr = r.child("observations");
    if (!arr || !arr->is_array()) throw io::SchemaError("model: missing observations");
    for (const auto& e : *arr) {
      io::ObjectReader orr(e, "observation");
      Observation o;
      std::string shot;
      orr.required("clip", o.clip_id).required("features", o.features).required("shot", shot);
      orr.required("v_b", o.v_b).required("placement_region", o.placement_region);
      auto st = shot_type_from_string(shot);
      if (!st) throw io::SchemaError("observation: unknown shot '" + shot + "'");
      o.shot = *st;
      if (const json* x = orr.child("x_b")) o.x_b = io::vec2_from(*x, "x_b");
      else throw io::SchemaError("observation: missing x_b");
      if (const json* x = orr.child("x_r")) {
        o.has_recovery = true;
        o.x_r = io::vec2_from(*x, "x_r");
      }
      orr.finish();
      m.obs_.push_back(std::move(o));
    }
    r.finish();
    m.bins_.validate();
    m.kde_.validate();
    m.build();
    return m;
  } catch (const io::SchemaError& e) {
    throw ParseError(e.what());
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

void BehaviorModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write(out);
}

BehaviorModel BehaviorModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  return read(in);
}

void BehaviorModel::write_cells(std::ostream& out) const {
  std::vector<std::pair<std::array<int, 5>, const ShotGroup*>> rows;
  for (const auto& [key, g] : shot_levels_[0]) rows.emplace_back(obs_[g.members.front()].features, &g);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out << "player_region,opponent_region,ball_start_region,ball_bounce_region,velocity_bin,clips";
  for (ShotType t : kAllShotTypes) out << ',' << to_string(t);
  out << '\n';
  for (const auto& [f, g] : rows) {
    for (int v : f) out << v << ',';
    out << g->members.size();
    for (auto c : g->counts) out << ',' << c;
    out << '\n';
  }
}

void BehaviorModel::write_placement_grid(std::ostream& out, const PointStateDescriptor& d, ShotType t,
                                         const CourtSpec& court, double spacing) const {
  const auto [g, relax] = lookup_shot(d);
  const auto f = d.features();
  out << "# player=" << player_ << " shot=" << to_string(t) << " features=" << f[0] << ',' << f[1] << ',' << f[2]
      << ',' << f[3] << ',' << f[4] << " k=" << relax.k() << " relaxed=" << relax.describe()
      << " bandwidth=" << bw_.placement << " support=" << g->placement[static_cast<int>(t)].support.size() << '\n';
  out << "x,y,density\n";
  const double xw = 0.5 * court.doubles_width + 1.0;
  const double yl = court.half_length() + 2.0;
  out << std::setprecision(6);
  for (double y = -yl; y <= 1e-9; y += spacing)
    for (double x = -xw; x <= xw + 1e-9; x += spacing)
      out << x << ',' << y << ',' << placement_density(*g, t, Vec2(x, y)) << '\n';
}

}  // namespace rallyforge
