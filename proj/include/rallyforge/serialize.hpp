#pragma once

#include "rallyforge/ball_physics.hpp"
#include "rallyforge/court.hpp"
#include "rallyforge/trajectory_fit.hpp"

#include <json.hpp>

#include <set>
#include <stdexcept>
#include <string>

namespace rallyforge::io {

using nlohmann::json;

/// Malformed or unexpected structured-text content.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads named members of one JSON object and rejects any member it was not asked about.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where);

  template <typename T>
  ObjectReader& optional(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) get(*it, key, out);
    return *this;
  }
  template <typename T>
  ObjectReader& required(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) throw SchemaError(where_ + ": missing '" + key + "'");
    get(*it, key, out);
    return *this;
  }
  const json* child(const char* key);
  /// Throws SchemaError naming the first member that was never read.
  void finish() const;

 private:
  template <typename T>
  void get(const json& v, const char* key, T& out) const {
    try {
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw SchemaError(where_ + "." + key + ": " + e.what());
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json vec_json(const Vec2& v);
json vec_json(const Vec3& v);
Vec2 vec2_from(const json& j, const std::string& where);
Vec3 vec3_from(const json& j, const std::string& where);

json to_json(const CourtSpec& c);
json to_json(const FlightParams& p);
json to_json(const BinConfig& b);
json to_json(const GridSpec& g);
/// Members missing from `j` keep the value already in `out`.
void read(const json& j, CourtSpec& out, const std::string& where = "court");
void read(const json& j, FlightParams& out, const std::string& where = "flight");
void read(const json& j, BinConfig& out, const std::string& where = "bins");
void read(const json& j, GridSpec& out, const std::string& where = "grid");

}  // namespace rallyforge::io
