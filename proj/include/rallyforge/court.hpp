#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace rallyforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Court dimensions in meters. Origin at the net center, y > 0 is the near
/// half, x > 0 is the ad side of the near player.
struct CourtSpec {
  double length = 23.77;
  double singles_width = 8.23;
  double doubles_width = 10.97;
  double service_line_dist = 6.40;
  double net_height_center = 0.914;
  double net_height_post = 1.07;

  double half_length() const { return 0.5 * length; }
  double half_singles() const { return 0.5 * singles_width; }
  /// Distance from the net of the front/back partition line.
  double depth_boundary() const { return 0.5 * (service_line_dist + half_length()); }
  /// Net height at lateral offset x, linear between center and posts.
  double net_height(double x) const;
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

struct BinConfig {
  double v_max = 8.0;
  int velocity_bins = 5;
  void validate() const;
};

enum class Side : std::uint8_t { Near, Far };
enum class Lateral : std::uint8_t { Deuce, Center, Ad };
enum class Depth : std::uint8_t { Front, Back };

struct CourtRegion {
  Side side = Side::Near;
  Lateral lateral = Lateral::Center;
  Depth depth = Depth::Back;

  /// Index within a side, 0..5.
  int local_index() const { return static_cast<int>(lateral) * 2 + static_cast<int>(depth); }
  /// Index over both sides, 0..11.
  int index() const { return static_cast<int>(side) * 6 + local_index(); }

  static CourtRegion from_index(int index);
  friend bool operator==(const CourtRegion&, const CourtRegion&) = default;
};

std::string_view to_string(Lateral lateral);

CourtRegion region_of(const Vec2& p, const CourtSpec& spec);
inline CourtRegion region_of(const Vec3& p, const CourtSpec& spec) { return region_of(Vec2(p.head<2>()), spec); }

int velocity_bin(double speed, const BinConfig& cfg);

inline Side side_of(double y) { return y >= 0.0 ? Side::Near : Side::Far; }
inline bool is_front(const Vec2& p, const CourtSpec& spec) { return std::abs(p.y()) < spec.depth_boundary(); }

/// Inside the singles lines (lines count as in).
bool in_singles_court(const Vec2& p, const CourtSpec& spec);
bool in_singles_half(const Vec2& p, Side side, const CourtSpec& spec);

enum class ServiceCourt : std::uint8_t { Deuce, Ad };

/// Service box on the receiver's side. The receiver is on `receiver_side`.
bool in_service_box(const Vec2& p, Side receiver_side, ServiceCourt court, const CourtSpec& spec);

/// 180 degree rotation about the net center; maps far-side play onto the near side
/// and keeps deuce/ad labels consistent.
inline Vec2 mirror(const Vec2& p) { return -p; }
inline Vec3 mirror(const Vec3& p) { return {-p.x(), -p.y(), p.z()}; }

/// +1 for near, -1 for far: multiplies y when mapping a side into the near frame.
inline double side_sign(Side side) { return side == Side::Near ? 1.0 : -1.0; }

}  // namespace rallyforge
