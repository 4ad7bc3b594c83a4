#include "rallyforge/types.hpp"

namespace rallyforge {

namespace {
constexpr std::array<std::string_view, kShotTypeCount> kShotNames = {"S", "FH-T", "FH-U", "BH-T", "BH-U", "FH-V", "BH-V"};
constexpr std::array<std::string_view, 4> kOutcomeNames = {"in_play", "winner", "error", "no_contact"};
}  // namespace

std::string_view to_string(ShotType type) { return kShotNames[static_cast<int>(type)]; }
std::string_view to_string(ShotOutcome outcome) { return kOutcomeNames[static_cast<int>(outcome)]; }
std::string_view to_string(Handedness hand) { return hand == Handedness::Right ? "right" : "left"; }

std::optional<ShotType> shot_type_from_string(std::string_view s) {
  for (int i = 0; i < kShotTypeCount; ++i)
    if (kShotNames[i] == s) return static_cast<ShotType>(i);
  return std::nullopt;
}

std::optional<ShotOutcome> outcome_from_string(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (kOutcomeNames[i] == s) return static_cast<ShotOutcome>(i);
  return std::nullopt;
}

std::optional<Handedness> handedness_from_string(std::string_view s) {
  if (s == "right") return Handedness::Right;
  if (s == "left") return Handedness::Left;
  return std::nullopt;
}

}  // namespace rallyforge
