#include "rallyforge/config.hpp"

#include "rallyforge/errors.hpp"
#include "rallyforge/serialize.hpp"

#include <cstdlib>
#include <fstream>

namespace rallyforge {

using nlohmann::json;

void EngineConfig::validate() const {
  try {
    court.validate();
    flight.validate();
    bins.validate();
    weights.validate();
    thresholds.validate();
    kde.validate();
    grid.validate();
    rally().validate();
    if (!(placement_fit.dt > 0.0) || !(placement_fit.search_dt >= placement_fit.dt) || !(placement_fit.max_time > 0.0))
      throw std::invalid_argument("placement_fit: need 0 < dt <= search_dt and max_time > 0");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RallyConfig EngineConfig::rally() const {
  RallyConfig r;
  r.max_shots = max_shots;
  r.weights = weights;
  r.thresholds = thresholds;
  r.placement_fit = placement_fit;
  r.bins = bins;
  return r;
}

json EngineConfig::to_json() const {
  json j;
  j["court"] = io::to_json(court);
  j["flight"] = io::to_json(flight);
  j["bins"] = io::to_json(bins);
  j["weights"] = {{"pose", weights.pose},
                  {"velo", weights.velo},
                  {"contact", weights.contact},
                  {"react_velo", weights.react_velo},
                  {"react_dir", weights.react_dir},
                  {"recover_velo", weights.recover_velo},
                  {"recover_dir", weights.recover_dir},
                  {"shot_velo", weights.shot_velo},
                  {"shot_place", weights.shot_place}};
  j["thresholds"] = {{"max_react_correction", thresholds.max_react_correction},
                     {"max_react_cost", thresholds.max_react_cost},
                     {"max_recover_correction", thresholds.max_recover_correction}};
  j["kde"] = {{"position_grid", kde.position_grid},
              {"velocity_grid", kde.velocity_grid},
              {"reject_fraction", kde.reject_fraction},
              {"max_attempts", kde.max_attempts}};
  j["grid"] = io::to_json(grid);
  j["placement_fit"] = {{"position_tolerance", placement_fit.position_tolerance},
                        {"speed_tolerance", placement_fit.speed_tolerance},
                        {"search_dt", placement_fit.search_dt},
                        {"dt", placement_fit.dt},
                        {"max_time", placement_fit.max_time}};
  j["rally"] = {{"max_shots", max_shots}};
  return j;
}

EngineConfig EngineConfig::from_json(const json& j) {
  EngineConfig c;
  try {
    io::ObjectReader top(j, "config");
    if (const json* s = top.child("court")) io::read(*s, c.court);
    if (const json* s = top.child("flight")) io::read(*s, c.flight);
    if (const json* s = top.child("bins")) io::read(*s, c.bins);
    if (const json* s = top.child("grid")) io::read(*s, c.grid);
    if (const json* s = top.child("weights")) {
      io::ObjectReader r(*s, "weights");
      r.optional("pose", c.weights.pose)
          .optional("velo", c.weights.velo)
          .optional("contact", c.weights.contact)
          .optional("react_velo", c.weights.react_velo)
          .optional("react_dir", c.weights.react_dir)
          .optional("recover_velo", c.weights.recover_velo)
          .optional("recover_dir", c.weights.recover_dir)
          .optional("shot_velo", c.weights.shot_velo)
          .optional("shot_place", c.weights.shot_place);
      r.finish();
    }
    if (const json* s = top.child("thresholds")) {
      io::ObjectReader r(*s, "thresholds");
      r.optional("max_react_correction", c.thresholds.max_react_correction)
          .optional("max_react_cost", c.thresholds.max_react_cost)
          .optional("max_recover_correction", c.thresholds.max_recover_correction);
      r.finish();
    }
    if (const json* s = top.child("kde")) {
      io::ObjectReader r(*s, "kde");
      r.optional("position_grid", c.kde.position_grid)
          .optional("velocity_grid", c.kde.velocity_grid)
          .optional("reject_fraction", c.kde.reject_fraction)
          .optional("max_attempts", c.kde.max_attempts);
      r.finish();
    }
    if (const json* s = top.child("placement_fit")) {
      io::ObjectReader r(*s, "placement_fit");
      r.optional("position_tolerance", c.placement_fit.position_tolerance)
          .optional("speed_tolerance", c.placement_fit.speed_tolerance)
          .optional("search_dt", c.placement_fit.search_dt)
          .optional("dt", c.placement_fit.dt)
          .optional("max_time", c.placement_fit.max_time);
      r.finish();
    }
    if (const json* s = top.child("rally")) {
      io::ObjectReader r(*s, "rally");
      r.optional("max_shots", c.max_shots);
      r.finish();
    }
    top.finish();
  } catch (const io::SchemaError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

EngineConfig EngineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return from_json(j);
}

EngineConfig EngineConfig::resolve(const std::optional<std::string>& path) {
  if (path) return load(*path);
  if (const char* env = std::getenv(kConfigEnv); env && *env) return load(env);
  return EngineConfig{};
}

}  // namespace rallyforge
