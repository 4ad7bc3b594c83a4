#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rallyforge {

enum class ShotType : std::uint8_t {
  Serve,
  ForehandTopspin,
  ForehandUnderspin,
  BackhandTopspin,
  BackhandUnderspin,
  ForehandVolley,
  BackhandVolley,
};
inline constexpr int kShotTypeCount = 7;
inline constexpr std::array<ShotType, kShotTypeCount> kAllShotTypes = {
    ShotType::Serve,           ShotType::ForehandTopspin, ShotType::ForehandUnderspin, ShotType::BackhandTopspin,
    ShotType::BackhandUnderspin, ShotType::ForehandVolley, ShotType::BackhandVolley};

enum class ShotOutcome : std::uint8_t { InPlay, Winner, Error, NoContact };

enum class Handedness : std::uint8_t { Right, Left };

/// Short labels: S, FH-T, FH-U, BH-T, BH-U, FH-V, BH-V.
std::string_view to_string(ShotType type);
std::string_view to_string(ShotOutcome outcome);
std::string_view to_string(Handedness hand);
std::optional<ShotType> shot_type_from_string(std::string_view s);
std::optional<ShotOutcome> outcome_from_string(std::string_view s);
std::optional<Handedness> handedness_from_string(std::string_view s);

inline bool is_forehand(ShotType t) {
  return t == ShotType::ForehandTopspin || t == ShotType::ForehandUnderspin || t == ShotType::ForehandVolley;
}
inline bool is_volley(ShotType t) { return t == ShotType::ForehandVolley || t == ShotType::BackhandVolley; }
inline bool is_groundstroke(ShotType t) { return t != ShotType::Serve && !is_volley(t); }
inline bool is_underspin(ShotType t) {
  return t == ShotType::ForehandUnderspin || t == ShotType::BackhandUnderspin;
}

}  // namespace rallyforge
