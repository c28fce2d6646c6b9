#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dronetour/physics.hpp"

namespace dronetour {

enum class VarKind { kContinuous, kBinary };
enum class Sense { kLe, kGe, kEq };

struct MilpVariable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lb = 0.0;
  double ub = 0.0;
  std::string symbol;  // model symbol, e.g. "w^LA"
};

struct MilpConstraint {
  std::string name;
  std::string family;
  std::vector<std::pair<int, double>> terms;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
};

struct MilpMode {
  enum class Kind { kMinTime, kMinEnergy };
  Kind kind = Kind::kMinTime;
  double t_star = 0.0;  // duration to respect in kMinEnergy

  static MilpMode min_time() { return {}; }
  static MilpMode min_energy_given(double t) { return {Kind::kMinEnergy, t}; }
};

class MilpInstance {
 public:
  int add_var(std::string name, VarKind kind, double lb, double ub, std::string symbol = {});
  void add_constraint(std::string name, std::string family, std::vector<std::pair<int, double>> terms,
                      Sense sense, double rhs);
  void set_objective(std::vector<std::pair<int, double>> terms) { objective_ = std::move(terms); }

  const std::vector<MilpVariable>& variables() const { return vars_; }
  const std::vector<MilpConstraint>& constraints() const { return cons_; }
  const std::vector<std::pair<int, double>>& objective() const { return objective_; }
  std::optional<int> find(const std::string& name) const;
  int at(const std::string& name) const;

  // Rows per constraint family, and variables per symbol.
  std::map<std::string, int> constraint_census() const;
  std::map<std::string, int> variable_census() const;

  int major_steps = 0;
  int minor_per_major = 1;
  bool coordinated = false;
  MilpMode mode;

 private:
  std::vector<MilpVariable> vars_;
  std::vector<MilpConstraint> cons_;
  std::vector<std::pair<int, double>> objective_;
  std::map<std::string, int> index_;
};

// Full trajectory model over params.t_major major steps of params.n_f minor
// steps. A fixed end point yields the drone-only variant (no truck coupling,
// unconditional kinematics, no truck-duration bound). When
// `reference_duration` is given, throws HorizonTooShort unless the horizon
// covers 1.5 times it.
MilpInstance build_trajectory_milp(const FlightSpec& spec, const DronePhysicsParams& params,
                                   const MilpMode& mode,
                                   std::optional<double> reference_duration = std::nullopt);

// CPLEX LP text; variables and rows in declaration order.
std::string export_milp(const MilpInstance& m);

// Reads the LP text produced by export_milp (and the common subset of the
// format: objective, Subject To, Bounds, Binaries/Generals, End). Throws
// ParseError with a line number.
MilpInstance parse_lp(const std::string& text);

// Variable values implied by an oracle trajectory, padded to the model
// horizon with the drone resting on the truck.
std::vector<double> assignment_from_trajectory(const MilpInstance& m, const FlightSpec& spec,
                                               const DronePhysicsParams& params, const Trajectory& traj);

struct Violation {
  std::string what;
  double amount = 0.0;
};

// Rows, bounds and integrality violated by more than tol.
std::vector<Violation> check_assignment(const MilpInstance& m, const std::vector<double>& x, double tol = 1e-6);

}  // namespace dronetour
