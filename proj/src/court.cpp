#include "rallyforge/court.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rallyforge {

double CourtSpec::net_height(double x) const {
  const double post_x = 0.5 * doubles_width;
  const double u = std::min(std::abs(x) / post_x, 1.0);
  return net_height_center + u * (net_height_post - net_height_center);
}

void CourtSpec::validate() const {
  for (double v : {length, singles_width, doubles_width, service_line_dist, net_height_center, net_height_post}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("court dimensions must be positive and finite");
  }
  if (!(singles_width < doubles_width)) throw std::invalid_argument("court: singles_width must be < doubles_width");
  if (!(service_line_dist < half_length())) throw std::invalid_argument("court: service_line_dist must be < length/2");
}

void BinConfig::validate() const {
  if (!(v_max > 0.0) || !std::isfinite(v_max)) throw std::invalid_argument("bins: v_max must be positive");
  if (velocity_bins < 1) throw std::invalid_argument("bins: velocity_bins must be >= 1");
}

CourtRegion CourtRegion::from_index(int index) {
  if (index < 0 || index >= 12) throw std::out_of_range("region index out of range");
  CourtRegion r;
  r.side = static_cast<Side>(index / 6);
  r.lateral = static_cast<Lateral>((index % 6) / 2);
  r.depth = static_cast<Depth>(index % 2);
  return r;
}

std::string_view to_string(Lateral lateral) {
  switch (lateral) {
    case Lateral::Deuce: return "deuce";
    case Lateral::Center: return "center";
    case Lateral::Ad: return "ad";
  }
  return "?";
}

CourtRegion region_of(const Vec2& p, const CourtSpec& spec) {
  CourtRegion r;
  r.side = side_of(p.y());
  r.depth = std::abs(p.y()) < spec.depth_boundary() ? Depth::Front : Depth::Back;

  // Bands are laid out in the player's own frame: the near player's deuce side
  // is -x, the far player's deuce side is +x.
  const double local_x = r.side == Side::Near ? p.x() : -p.x();
  const double band = spec.singles_width / 3.0;
  const int k = std::clamp(static_cast<int>(std::floor((local_x + spec.half_singles()) / band)), 0, 2);
  r.lateral = static_cast<Lateral>(k);
  return r;
}

int velocity_bin(double speed, const BinConfig& cfg) {
  const double width = cfg.v_max / cfg.velocity_bins;
  if (!(speed > 0.0)) return 0;
  return std::min(static_cast<int>(std::floor(speed / width)), cfg.velocity_bins - 1);
}

bool in_singles_court(const Vec2& p, const CourtSpec& spec) {
  return std::abs(p.x()) <= spec.half_singles() && std::abs(p.y()) <= spec.half_length();
}

bool in_singles_half(const Vec2& p, Side side, const CourtSpec& spec) {
  if (!in_singles_court(p, spec)) return false;
  return side == Side::Near ? p.y() >= 0.0 : p.y() <= 0.0;
}

bool in_service_box(const Vec2& p, Side receiver_side, ServiceCourt court, const CourtSpec& spec) {
  const double sign = side_sign(receiver_side);
  const double local_x = sign * p.x();
  const double local_y = sign * p.y();
  if (local_y < 0.0 || local_y > spec.service_line_dist) return false;
  if (std::abs(local_x) > spec.half_singles()) return false;
  // Deuce box is the receiver's right half: -x in the near frame.
  return court == ServiceCourt::Deuce ? local_x <= 0.0 : local_x >= 0.0;
}

}  // namespace rallyforge
