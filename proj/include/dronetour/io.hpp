#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "dronetour/geometry.hpp"
#include "dronetour/physics.hpp"
#include "dronetour/planner.hpp"

namespace dronetour {

// Environment variable naming the default params file.
inline constexpr const char* kParamsEnv = "DRONETOUR_PARAMS";

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);
// Parses JSON text; syntax errors become ParseError tagged with `what`.
nlohmann::json parse_json(const std::string& text, const std::string& what);

// Keys absent from the object keep their defaults; unknown keys are rejected.
DronePhysicsParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const DronePhysicsParams& p);
// Explicit path, else the file named by DRONETOUR_PARAMS, else defaults.
DronePhysicsParams load_params(const std::optional<std::string>& path = std::nullopt);

nlohmann::json ras_to_json(const Ras& r);
Ras ras_from_json(const nlohmann::json& j);
nlohmann::json road_to_json(const RoadGraph& g);
RoadGraph road_from_json(const nlohmann::json& j);

// {name, depot, deliveries:[{id,x,y}], travel_mode:{type, ...}, ras:[...], clearance}
nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);
Instance load_instance(const std::string& path);

// Operations in order with node roles, t_o, energy and, when trajectories are
// written separately, the CSV file name per drone operation.
nlohmann::json plan_to_json(const Instance& inst, const Plan& plan, const std::string& trajectory_prefix = {});

}  // namespace dronetour
