#include "rallyforge/shot_direction.hpp"

#include "rallyforge/ball_physics.hpp"

#include <cmath>

namespace rallyforge {

std::string_view to_string(ShotDirection d) {
  switch (d) {
    case ShotDirection::CrossCourt: return "cross";
    case ShotDirection::DownTheLine: return "line";
  }
  return "?";
}

double hitting_side_sign(const Vec2& contact, ShotType shot, Handedness hand, const CourtSpec& court) {
  const CourtRegion r = region_of(contact, court);
  const double s = side_sign(r.side);
  // Deuce is the near player's -x side and the far player's +x side.
  if (r.lateral == Lateral::Deuce) return -s;
  if (r.lateral == Lateral::Ad) return s;
  const double racket = racket_side_sign(r.side, hand);
  return is_forehand(shot) || shot == ShotType::Serve ? racket : -racket;
}

ShotDirection shot_direction(const Vec2& contact, ShotType shot, Handedness hand, const Vec2& placement,
                             const CourtSpec& court) {
  const double s = hitting_side_sign(contact, shot, hand, court);
  return placement.x() * s < 0.0 ? ShotDirection::CrossCourt : ShotDirection::DownTheLine;
}

}  // namespace rallyforge
