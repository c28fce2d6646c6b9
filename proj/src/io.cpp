#include "dronetour/io.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dronetour/error.hpp"

namespace dronetour {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

namespace {

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(what + ": " + e.what());
  }
}

}  // namespace

DronePhysicsParams params_from_json(const json& j) {
  return guarded("params", [&] {
    if (!j.is_object()) throw ParseError("params: expected an object");
    DronePhysicsParams p;
    static const std::set<std::string> known = {
        "v_max", "a_max", "climb_max", "descent_max", "h_lo", "h_hi", "h_min_airborne", "cruise_alt",
        "truck_bed_alt", "delivery_radius", "dt_minor", "n_f", "t_major", "altitude_band_limits",
        "throttle_band_speeds", "energy_rate", "climb_surplus", "battery_capacity", "min_charge", "big_m",
        "lambda2", "lambda3"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (known.count(it.key()) == 0) throw ParseError("params: unknown key " + it.key());
    }
    auto num = [&](const char* k, double& v) {
      if (j.contains(k)) v = j.at(k).get<double>();
    };
    num("v_max", p.v_max);
    num("a_max", p.a_max);
    num("climb_max", p.climb_max);
    num("descent_max", p.descent_max);
    num("h_lo", p.h_lo);
    num("h_hi", p.h_hi);
    num("h_min_airborne", p.h_min_airborne);
    num("cruise_alt", p.cruise_alt);
    num("truck_bed_alt", p.truck_bed_alt);
    num("delivery_radius", p.delivery_radius);
    num("dt_minor", p.dt_minor);
    if (j.contains("n_f")) p.n_f = j.at("n_f").get<int>();
    if (j.contains("t_major")) p.t_major = j.at("t_major").get<int>();
    if (j.contains("altitude_band_limits")) p.altitude_band_limits = j.at("altitude_band_limits").get<std::vector<double>>();
    if (j.contains("throttle_band_speeds")) p.throttle_band_speeds = j.at("throttle_band_speeds").get<std::vector<double>>();
    if (j.contains("energy_rate")) p.energy_rate = j.at("energy_rate").get<std::vector<std::vector<double>>>();
    num("climb_surplus", p.climb_surplus);
    num("battery_capacity", p.battery_capacity);
    num("min_charge", p.min_charge);
    num("big_m", p.big_m);
    num("lambda2", p.norm.lambda2);
    num("lambda3", p.norm.lambda3);
    p.validate();
    return p;
  });
}

json params_to_json(const DronePhysicsParams& p) {
  return {{"v_max", p.v_max}, {"a_max", p.a_max}, {"climb_max", p.climb_max}, {"descent_max", p.descent_max},
          {"h_lo", p.h_lo}, {"h_hi", p.h_hi}, {"h_min_airborne", p.h_min_airborne}, {"cruise_alt", p.cruise_alt},
          {"truck_bed_alt", p.truck_bed_alt}, {"delivery_radius", p.delivery_radius}, {"dt_minor", p.dt_minor},
          {"n_f", p.n_f}, {"t_major", p.t_major}, {"altitude_band_limits", p.altitude_band_limits},
          {"throttle_band_speeds", p.throttle_band_speeds}, {"energy_rate", p.energy_rate},
          {"climb_surplus", p.climb_surplus}, {"battery_capacity", p.battery_capacity},
          {"min_charge", p.min_charge}, {"big_m", p.big_m}, {"lambda2", p.norm.lambda2},
          {"lambda3", p.norm.lambda3}};
}

DronePhysicsParams load_params(const std::optional<std::string>& path) {
  std::string file;
  if (path && !path->empty()) {
    file = *path;
  } else if (const char* env = std::getenv(kParamsEnv); env != nullptr && *env != '\0') {
    file = env;
  }
  if (file.empty()) return {};
  return params_from_json(parse_json(read_file(file), file));
}

json ras_to_json(const Ras& r) {
  json hs = json::array();
  for (const auto& h : r.halfspaces()) hs.push_back({{"normal", h.normal}, {"rhs", h.rhs}});
  return {{"id", r.id()}, {"halfspaces", hs}};
}

Ras ras_from_json(const json& j) {
  return guarded("ras", [&] {
    std::vector<Halfspace> hs;
    for (const auto& h : j.at("halfspaces")) hs.push_back({h.at("normal").get<std::array<double, 3>>(), h.at("rhs").get<double>()});
    return Ras(j.value("id", std::string()), std::move(hs));
  });
}

json road_to_json(const RoadGraph& g) {
  json nodes = json::array();
  for (const auto& p : g.nodes()) nodes.push_back({p.x, p.y});
  json edges = json::array();
  for (const auto& e : g.edges()) {
    edges.push_back({{"from", e.from}, {"to", e.to}, {"length", e.length}, {"speed", e.speed}, {"oneway", e.oneway}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

RoadGraph road_from_json(const json& j) {
  return guarded("road graph", [&] {
    std::vector<Point2> nodes;
    for (const auto& p : j.at("nodes")) nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    std::vector<RoadEdge> edges;
    for (const auto& e : j.at("edges")) {
      edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(), e.at("length").get<double>(),
                       e.at("speed").get<double>(), e.value("oneway", false)});
    }
    return RoadGraph(std::move(nodes), std::move(edges));
  });
}

json instance_to_json(const Instance& inst) {
  json dl = json::array();
  for (int i = 0; i < inst.n(); ++i) {
    const int id = inst.ids.empty() ? i + 1 : inst.ids[static_cast<std::size_t>(i)];
    dl.push_back({{"id", id}, {"x", inst.deliveries[static_cast<std::size_t>(i)].x},
                  {"y", inst.deliveries[static_cast<std::size_t>(i)].y}});
  }
  json mode;
  if (inst.mode == TravelMode::kRoad) {
    mode = {{"type", "road"}, {"road", road_to_json(*inst.road)}, {"anchors", inst.anchors}};
  } else {
    mode = {{"type", "euclidean"}, {"truck_speed", inst.truck_speed}};
  }
  json ras = json::array();
  for (const auto& r : inst.ras) ras.push_back(ras_to_json(r));
  return {{"name", inst.name}, {"depot", {{"x", inst.depot.x}, {"y", inst.depot.y}}}, {"deliveries", dl},
          {"travel_mode", mode}, {"ras", ras}, {"clearance", inst.clearance}};
}

Instance instance_from_json(const json& j) {
  Instance inst = guarded("instance", [&] {
    Instance out;
    out.name = j.value("name", std::string());
    out.depot = {j.at("depot").at("x").get<double>(), j.at("depot").at("y").get<double>()};
    for (const auto& d : j.at("deliveries")) {
      out.ids.push_back(d.at("id").get<int>());
      out.deliveries.push_back({d.at("x").get<double>(), d.at("y").get<double>()});
    }
    const auto& mode = j.at("travel_mode");
    const auto type = mode.at("type").get<std::string>();
    if (type == "road") {
      out.mode = TravelMode::kRoad;
      out.road = std::make_shared<RoadGraph>(road_from_json(mode.at("road")));
      out.anchors = mode.at("anchors").get<std::vector<int>>();
    } else if (type == "euclidean") {
      out.mode = TravelMode::kEuclidean;
      out.truck_speed = mode.at("truck_speed").get<double>();
    } else {
      throw ParseError("instance: unknown travel mode " + type);
    }
    if (j.contains("ras")) {
      for (const auto& r : j.at("ras")) out.ras.push_back(ras_from_json(r));
    }
    out.clearance = j.value("clearance", out.clearance);
    return out;
  });
  inst.validate();
  return inst;
}

Instance load_instance(const std::string& path) { return instance_from_json(parse_json(read_file(path), path)); }

json plan_to_json(const Instance& inst, const Plan& plan, const std::string& trajectory_prefix) {
  auto ext = [&](int node) -> int {
    if (node == 0) return 0;
    return inst.ids.empty() ? node : inst.ids[static_cast<std::size_t>(node - 1)];
  };
  json ops = json::array();
  for (std::size_t i = 0; i < plan.operations.size(); ++i) {
    const auto& o = plan.operations[i];
    json nodes = json::array();
    nodes.push_back({{"node", ext(o.start)}, {"role", "start"}});
    for (int v : o.truck_seq) nodes.push_back({{"node", ext(v)}, {"role", "truck"}});
    if (o.drone_node) nodes.push_back({{"node", ext(*o.drone_node)}, {"role", "drone"}});
    nodes.push_back({{"node", ext(o.end)}, {"role", "end"}});
    json op = {{"index", i}, {"nodes", nodes}, {"t_truck", o.t_truck}, {"t_drone_est", o.t_drone_est},
               {"t_o", o.t_o}, {"energy", o.energy}};
    if (o.trajectory && !trajectory_prefix.empty()) op["trajectory_csv"] = trajectory_prefix + std::to_string(i) + ".csv";
    ops.push_back(op);
  }
  return {{"operations", ops}, {"total_duration", plan.total_duration}, {"total_dec", plan.total_dec},
          {"drone_nodes", plan.drone_count()}, {"verified", plan.verified}};
}

}  // namespace dronetour
