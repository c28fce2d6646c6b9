#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dronetour/error.hpp"
#include "dronetour/milp.hpp"

using namespace dronetour;

namespace {

struct Shape {
  int T = 2;
  int nf = 1;
  int L = 2;
  int V = 4;
  std::vector<int> faces;  // per airspace
  bool coordinated = false;
  bool min_time = true;
};

// Family sizes counted from the model's equation blocks.
std::map<std::string, int> expected_census(const Shape& s) {
  const int NT = s.T * s.nf;
  std::map<std::string, int> c;
  if (s.min_time) {
    c["duration_bound"] = s.T;
    if (s.coordinated) c["truck_duration"] = 1;
  } else {
    c["duration_cap"] = s.T;
    c["energy_total"] = 1;
  }
  if (s.coordinated) {
    c["rest_z"] = 2 * NT;
    c["rest_r"] = 4 * NT;
    c["rest_v"] = 4 * NT;
    for (const char* f : {"kin_pos_next", "kin_pos_cur", "kin_vel_next", "kin_vel_cur"}) c[f] = 4 * (NT - 1);
  } else {
    c["kin_pos"] = 2 * (NT - 1);
    c["kin_vel"] = 2 * (NT - 1);
  }
  c["airborne_link"] = s.T;
  c["takeoff_once"] = s.T - 1;
  c["landing_once"] = s.T - 1;
  c["delivery_offset"] = 3 * s.T;
  c["delivery_radius"] = s.T;
  c["delivery_once"] = 1;
  c["altitude_limits"] = 2 * NT;
  c["min_airborne_alt"] = NT - 1;
  c["start"] = 3;
  c["end"] = 3;
  c["climb_update"] = NT - 1;
  c["climb_limit"] = NT;
  c["descent_limit"] = NT;
  c["speed_limit"] = NT;
  c["accel_limit"] = NT;
  c["energy_start"] = 1;
  c["energy_limits"] = NT;
  c["energy_update"] = NT - 1;
  c["band_speed"] = 2 * NT;
  c["band_altitude"] = 2 * NT;
  c["band_select"] = s.T;
  int face_total = 0;
  for (int f : s.faces) face_total += f;
  if (!s.faces.empty()) {
    c["ras_face"] = NT * face_total;
    c["ras_outside"] = s.T * static_cast<int>(s.faces.size());
  }
  // Planar norm: definition, two caps, four max selectors, six per axis.
  c["vnorm"] = 19 * NT;
  c["anorm"] = 19 * NT;
  // Spatial norm: definition, four caps, eight max selectors, six per axis.
  c["wnorm"] = 31 * s.T;
  return c;
}

int expected_variables(const Shape& s) {
  int faces = 0;
  for (int f : s.faces) faces += f;
  const int per_major = 4 + 9 + 5 + s.L * s.V + faces;
  const int per_minor = 3 + 4 + 2 + 8 + 6 + 1;
  return s.T * per_major + s.T * s.nf * per_minor + 1;
}

DronePhysicsParams small_params(int T, int nf) {
  DronePhysicsParams p;
  p.t_major = T;
  p.n_f = nf;
  return p;
}

FlightSpec fixed_spec(Point2 a, Point2 d, Point2 e, const DronePhysicsParams& p) {
  FlightSpec s;
  s.start = {a.x, a.y, p.truck_bed_alt};
  s.delivery = {d.x, d.y, 0.0};
  s.end = Point3{e.x, e.y, p.truck_bed_alt};
  return s;
}

// Minimal reader independent of parse_lp: section headers, row names and
// the set of names declared in Bounds and Binaries.
struct LpSummary {
  int rows = 0;
  std::set<std::string> row_names;
  std::set<std::string> bounded;
  std::set<std::string> binaries;
  bool ended = false;
};

LpSummary skim_lp(const std::string& text) {
  LpSummary s;
  std::istringstream in(text);
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '\\') continue;
    if (line[0] != ' ') {
      section = line;
      if (line == "End") s.ended = true;
      continue;
    }
    std::istringstream words(line);
    std::string first;
    words >> first;
    if (section == "Subject To") {
      REQUIRE(first.back() == ':');
      s.row_names.insert(first.substr(0, first.size() - 1));
      ++s.rows;
    } else if (section == "Bounds") {
      std::string w = first;
      if (w == "-inf" || std::isdigit(static_cast<unsigned char>(w[0])) || w[0] == '-') {
        std::string op;
        words >> op >> w;
      }
      s.bounded.insert(w);
    } else if (section == "Binaries") {
      s.binaries.insert(first);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("census of the smallest drone-only model") {
  const auto p = small_params(2, 1);
  const auto spec = fixed_spec({0, 0}, {30, 40}, {0, 0}, p);
  const auto m = build_trajectory_milp(spec, p, MilpMode::min_time());
  Shape s;
  CHECK(m.constraint_census() == expected_census(s));
  CHECK(static_cast<int>(m.variables().size()) == expected_variables(s));
  CHECK(static_cast<int>(m.variables().size()) == 101);
  const auto vc = m.variable_census();
  CHECK(vc.at("w^LA") == 2);
  CHECK(vc.at("w^LB") == 2);
  CHECK(vc.at("w^D") == 6);
  CHECK(vc.at("v^M") == 2);
  CHECK(vc.at("v^D") == 4);
  CHECK(vc.at("a^M") == 2);
  CHECK(vc.at("a^D") == 4);
  CHECK(vc.at("s") == 16);
}

TEST_CASE("census with airspace, truck coupling and energy mode") {
  auto p = small_params(3, 2);
  FlightSpec spec = fixed_spec({0, 0}, {30, 40}, {0, 0}, p);
  spec.ras = {Ras::box("a", 100, 100, 120, 120), Ras::box("b", -50, -50, -40, -40, 80.0)};
  spec.end = TimedTruckPath({{0, 0}, {60, 0}}, {10.0}, p.dt_minor);
  Shape s;
  s.T = 3;
  s.nf = 2;
  s.faces = {4, 5};
  s.coordinated = true;
  const auto m = build_trajectory_milp(spec, p, MilpMode::min_time());
  CHECK(m.constraint_census() == expected_census(s));
  CHECK(static_cast<int>(m.variables().size()) == expected_variables(s));
  CHECK(m.variable_census().at("f") == 3 * 9);

  s.min_time = false;
  const auto e = build_trajectory_milp(spec, p, MilpMode::min_energy_given(40.0));
  CHECK(e.constraint_census() == expected_census(s));
  CHECK(e.find("g_total").has_value());
  CHECK_FALSE(e.find("t_o").has_value());
}

TEST_CASE("every big-M coefficient is the configured value") {
  auto p = small_params(2, 2);
  p.big_m = 12345.0;
  FlightSpec spec = fixed_spec({0, 0}, {30, 40}, {0, 0}, p);
  spec.ras = {Ras::box("a", 100, 100, 120, 120)};
  const auto m = build_trajectory_milp(spec, p, MilpMode::min_time());
  int hits = 0;
  for (const auto& c : m.constraints()) {
    for (const auto& [id, a] : c.terms) {
      if (m.variables()[static_cast<std::size_t>(id)].kind == VarKind::kBinary && std::abs(a) > 1000.0) {
        CHECK(std::abs(a) == 12345.0);
        ++hits;
      }
    }
  }
  CHECK(hits > 0);
}

TEST_CASE("horizon must cover the reference duration") {
  const auto p = small_params(2, 5);
  const auto spec = fixed_spec({0, 0}, {30, 40}, {0, 0}, p);
  CHECK_THROWS_AS(build_trajectory_milp(spec, p, MilpMode::min_time(), 7.0), HorizonTooShort);
  CHECK_NOTHROW(build_trajectory_milp(spec, p, MilpMode::min_time(), 6.0));
}

TEST_CASE("binaries are bounded by zero and one in the export") {
  const auto p = small_params(2, 1);
  const auto m = build_trajectory_milp(fixed_spec({0, 0}, {30, 40}, {0, 0}, p), p, MilpMode::min_time());
  const auto text = export_milp(m);
  for (const auto& v : m.variables()) {
    if (v.kind != VarKind::kBinary) continue;
    CHECK(v.lb == 0.0);
    CHECK(v.ub == 1.0);
    CHECK(text.find(" 0 <= " + v.name + " <= 1\n") != std::string::npos);
  }
}

TEST_CASE("minimal document") {
  MilpInstance m;
  const int x = m.add_var("x", VarKind::kContinuous, 0.0, 10.0);
  m.add_constraint("c1", "only", {{x, 2.0}}, Sense::kLe, 4.0);
  const auto text = export_milp(m);
  CHECK(text.find("Subject To\n c1: 2 x <= 4\n") != std::string::npos);
  CHECK(text.find("End\n") != std::string::npos);
  const auto back = parse_lp(text);
  REQUIRE(back.constraints().size() == 1);
  CHECK(back.constraints()[0].rhs == 4.0);
  CHECK(back.variables()[0].ub == 10.0);
}

TEST_CASE("export and reparse give the same matrix") {
  auto p = small_params(2, 2);
  FlightSpec spec = fixed_spec({0, 0}, {30, 40}, {10, 5}, p);
  spec.ras = {Ras::box("a", 100, 100, 120, 120)};
  const auto m = build_trajectory_milp(spec, p, MilpMode::min_energy_given(12.5));
  const auto text = export_milp(m);
  const auto r = parse_lp(text);
  REQUIRE(r.variables().size() == m.variables().size());
  REQUIRE(r.constraints().size() == m.constraints().size());
  for (std::size_t i = 0; i < m.variables().size(); ++i) {
    CHECK(r.variables()[i].name == m.variables()[i].name);
    CHECK(r.variables()[i].kind == m.variables()[i].kind);
    CHECK(r.variables()[i].lb == m.variables()[i].lb);
    CHECK(r.variables()[i].ub == m.variables()[i].ub);
  }
  for (std::size_t i = 0; i < m.constraints().size(); ++i) {
    const auto& a = m.constraints()[i];
    const auto& b = r.constraints()[i];
    CHECK(a.name == b.name);
    CHECK(a.sense == b.sense);
    CHECK(a.rhs == b.rhs);
    CHECK(a.terms == b.terms);
  }
  CHECK(r.objective() == m.objective());
  CHECK(export_milp(r).substr(text.find("Minimize")) == text.substr(text.find("Minimize")));

  const auto skim = skim_lp(text);
  CHECK(skim.ended);
  CHECK(skim.rows == static_cast<int>(m.constraints().size()));
  CHECK(skim.row_names.size() == m.constraints().size());
  CHECK(skim.bounded.size() == m.variables().size());
  for (const auto& v : m.variables()) CHECK(skim.bounded.count(v.name) == 1);
}

TEST_CASE("malformed LP text names the line") {
  CHECK_THROWS_AS(parse_lp("Minimize\n obj: x\nSubject To\n c1: x <= \nEnd\n"), ParseError);
  try {
    parse_lp("Minimize\n obj: x\nSubject To\n c1: 2 x <= 1\n c2: x >>= 1\nEnd\n");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

// A coarse minor step reaches the airborne floor in one climb or descent
// step, and keeps every state of a short hop in the slowest throttle band.
DronePhysicsParams coarse_params(int T, int nf = 1) {
  auto p = small_params(T, nf);
  p.dt_minor = 10.0;
  p.cruise_alt = 25.0;
  return p;
}

// The truck leaves the launch point for the fixed end at walking pace.
TimedTruckPath truck_from(const FlightSpec& spec, const DronePhysicsParams& p) {
  const Point2 a = spec.start.xy(), e = std::get<Point3>(spec.end).xy();
  if (a == e) return TimedTruckPath::parked(a, p.dt_minor);
  return TimedTruckPath({a, e}, {2.0}, p.dt_minor);
}

int certify(const FlightSpec& spec, const DronePhysicsParams& p, double slack) {
  const auto traj = std::holds_alternative<Point3>(spec.end) ? plan_drone_only_flight(spec, p)
                                                             : plan_coordinated_flight(spec, p);
  int clean = 0;
  for (const auto& mode : {MilpMode::min_time(), MilpMode::min_energy_given(traj.duration)}) {
    const auto m = build_trajectory_milp(spec, p, mode);
    const auto x = assignment_from_trajectory(m, spec, p, traj);
    const auto bad = check_assignment(m, x, slack);
    for (const auto& v : bad) MESSAGE(v.what << " by " << v.amount);
    clean += bad.empty() ? 1 : 0;
  }
  return clean;
}

TEST_CASE("oracle trajectories satisfy the model") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  int clean = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = coarse_params(40);
    FlightSpec spec = fixed_spec({u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, p);
    if (trial % 2 == 1) spec.end = truck_from(spec, p);
    if (trial % 4 == 3) spec.ras = {Ras::box("r", 260, -100, 320, 100)};
    clean += certify(spec, p, 1e-6);
  }
  CHECK(clean == 40);
}

TEST_CASE("a straight drop fits five major steps") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  for (int trial = 0; trial < 4; ++trial) {
    const auto p = coarse_params(5);
    const Point2 a{u(rng), u(rng)};
    CHECK(certify(fixed_spec(a, a, a, p), p, 1e-6) == 2);
  }
}

TEST_CASE("sub-step take-off breaks energy accounting") {
  // With two minor steps per major step the take-off interval is charged band
  // energy by the model but not by the oracle.
  const auto p = coarse_params(6, 2);
  const auto spec = fixed_spec({0, 0}, {10, 5}, {-5, 10}, p);
  const auto traj = plan_drone_only_flight(spec, p);
  const auto m = build_trajectory_milp(spec, p, MilpMode::min_time());
  const auto bad = check_assignment(m, assignment_from_trajectory(m, spec, p, traj), 1e-6);
  bool energy = false;
  for (const auto& v : bad) energy = energy || v.what.rfind("energy_update", 0) == 0;
  CHECK(energy);
}

TEST_CASE("a perturbed assignment is caught") {
  auto p = small_params(4, 30);
  const auto spec = fixed_spec({0, 0}, {60, 80}, {0, 0}, p);
  const auto traj = plan_drone_only_flight(spec, p);
  const auto m = build_trajectory_milp(spec, p, MilpMode::min_time());
  auto x = assignment_from_trajectory(m, spec, p, traj);
  x[static_cast<std::size_t>(m.at("r_z_5"))] += 1.0;
  CHECK_FALSE(check_assignment(m, x).empty());
}
