#pragma once

#include "rallyforge/court.hpp"
#include "rallyforge/types.hpp"

namespace rallyforge {

enum class ShotDirection : std::uint8_t { CrossCourt, DownTheLine };

std::string_view to_string(ShotDirection d);

/// Global x sign of the side of the court the shot is struck from: the lateral
/// band of the contact point, or the stroke's wing when contact is in the
/// center band.
double hitting_side_sign(const Vec2& contact, ShotType shot, Handedness hand, const CourtSpec& court);

/// CrossCourt when the placement lands on the opposite x sign from the hitting
/// side, DownTheLine otherwise.
ShotDirection shot_direction(const Vec2& contact, ShotType shot, Handedness hand, const Vec2& placement,
                             const CourtSpec& court);

}  // namespace rallyforge
