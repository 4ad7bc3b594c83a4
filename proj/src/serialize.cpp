#include "rallyforge/serialize.hpp"

#include <cmath>

namespace rallyforge::io {

ObjectReader::ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
  if (!j_.is_object()) throw SchemaError(where_ + ": expected an object");
}

const json* ObjectReader::child(const char* key) {
  seen_.insert(key);
  auto it = j_.find(key);
  return it == j_.end() ? nullptr : &*it;
}

void ObjectReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it)
    if (!seen_.count(it.key())) throw SchemaError(where_ + ": unknown key '" + it.key() + "'");
}

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

namespace {

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != N) throw SchemaError(where + ": expected " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_number()) throw SchemaError(where + ": expected a number");
    v[i] = j[i].get<double>();
    if (!std::isfinite(v[i])) throw SchemaError(where + ": non-finite value");
  }
  return v;
}

}  // namespace

Vec2 vec2_from(const json& j, const std::string& where) { return vec_from<2>(j, where); }
Vec3 vec3_from(const json& j, const std::string& where) { return vec_from<3>(j, where); }

json to_json(const CourtSpec& c) {
  return {{"length", c.length},
          {"singles_width", c.singles_width},
          {"doubles_width", c.doubles_width},
          {"service_line_dist", c.service_line_dist},
          {"net_height_center", c.net_height_center},
          {"net_height_post", c.net_height_post}};
}

json to_json(const FlightParams& p) {
  return {{"k", p.k},
          {"drag_coefficient", p.drag_coefficient},
          {"gravity", p.gravity},
          {"restitution", p.restitution},
          {"horizontal_retention", p.horizontal_retention},
          {"spin_retention", p.spin_retention},
          {"spin_from_speed", p.spin_from_speed}};
}

json to_json(const BinConfig& b) { return {{"v_max", b.v_max}, {"velocity_bins", b.velocity_bins}}; }

json to_json(const GridSpec& g) {
  return {{"v_h_min", g.v_h_min},   {"v_h_max", g.v_h_max},
          {"v_h_steps", g.v_h_steps}, {"v_z_min", g.v_z_min},
          {"v_z_max", g.v_z_max},   {"v_z_steps", g.v_z_steps},
          {"spins", g.spins},       {"both_spin_kinds", g.both_spin_kinds},
          {"w_pos", g.w_pos},       {"w_time", g.w_time},
          {"tolerance", g.tolerance}, {"residual_cap", g.residual_cap},
          {"search_dt", g.search_dt}, {"dt", g.dt},
          {"polish", g.polish}};
}

void read(const json& j, CourtSpec& out, const std::string& where) {
  ObjectReader r(j, where);
  r.optional("length", out.length)
      .optional("singles_width", out.singles_width)
      .optional("doubles_width", out.doubles_width)
      .optional("service_line_dist", out.service_line_dist)
      .optional("net_height_center", out.net_height_center)
      .optional("net_height_post", out.net_height_post);
  r.finish();
}

void read(const json& j, FlightParams& out, const std::string& where) {
  ObjectReader r(j, where);
  r.optional("k", out.k)
      .optional("drag_coefficient", out.drag_coefficient)
      .optional("gravity", out.gravity)
      .optional("restitution", out.restitution)
      .optional("horizontal_retention", out.horizontal_retention)
      .optional("spin_retention", out.spin_retention)
      .optional("spin_from_speed", out.spin_from_speed);
  r.finish();
}

void read(const json& j, BinConfig& out, const std::string& where) {
  ObjectReader r(j, where);
  r.optional("v_max", out.v_max).optional("velocity_bins", out.velocity_bins);
  r.finish();
}

void read(const json& j, GridSpec& out, const std::string& where) {
  ObjectReader r(j, where);
  r.optional("v_h_min", out.v_h_min)
      .optional("v_h_max", out.v_h_max)
      .optional("v_h_steps", out.v_h_steps)
      .optional("v_z_min", out.v_z_min)
      .optional("v_z_max", out.v_z_max)
      .optional("v_z_steps", out.v_z_steps)
      .optional("spins", out.spins)
      .optional("both_spin_kinds", out.both_spin_kinds)
      .optional("w_pos", out.w_pos)
      .optional("w_time", out.w_time)
      .optional("tolerance", out.tolerance)
      .optional("residual_cap", out.residual_cap)
      .optional("search_dt", out.search_dt)
      .optional("dt", out.dt)
      .optional("polish", out.polish);
  r.finish();
}

}  // namespace rallyforge::io
