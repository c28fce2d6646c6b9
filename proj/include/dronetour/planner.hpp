#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dronetour/estimators.hpp"
#include "dronetour/geometry.hpp"
#include "dronetour/physics.hpp"

namespace dronetour {

enum class TravelMode { kEuclidean, kRoad };

// Node 0 is the depot; node i >= 1 is deliveries[i - 1].
struct Instance {
  std::string name;
  Point2 depot;
  std::vector<Point2> deliveries;
  std::vector<int> ids;  // external delivery ids, parallel to deliveries
  TravelMode mode = TravelMode::kEuclidean;
  double truck_speed = 40.0 / 3.6;  // m/s, euclidean mode
  std::shared_ptr<const RoadGraph> road;
  std::vector<int> anchors;  // road node per instance node, road mode
  std::vector<Ras> ras;
  double clearance = 2.01;  // m kept from footprints by truck routes and nodes

  int n() const { return static_cast<int>(deliveries.size()); }
  int node_count() const { return n() + 1; }
  const Point2& coord(int node) const { return node == 0 ? depot : deliveries[static_cast<std::size_t>(node - 1)]; }
  // Distinct nodes, outside every inflated footprint, consistent road data.
  void validate() const;
};

struct Operation {
  int start = 0;
  std::vector<int> truck_seq;
  std::optional<int> drone_node;
  int end = 0;
  double t_truck = 0.0;
  double t_drone_est = 0.0;
  double t_o = 0.0;
  double energy = 0.0;  // J, set by finalize_plan
  std::optional<Trajectory> trajectory;
};

struct Plan {
  std::vector<Operation> operations;
  double total_duration = 0.0;
  double total_dec = 0.0;
  bool verified = false;

  int drone_count() const;
  double drone_time_estimate() const;  // sum of estimated drone times
  std::vector<int> tour() const;       // node order including both depot visits
};

// Truck travel between instance nodes. Euclidean mode routes around
// airspace footprints (ground level) when any are present.
double truck_leg_time(const Instance& inst, int a, int b);

struct TruckLegPath {
  std::vector<Point2> waypoints;
  std::vector<double> speeds;  // one per waypoint pair
  double time = 0.0;
};
TruckLegPath truck_leg_path(const Instance& inst, int a, int b);

// Times used in planning are rounded to multiples of 2^-20 s. Sums of such
// values below 2^33 s are exact, so a plan's duration does not depend on the
// order its legs are added in.
inline double on_time_grid(double t) { return std::ldexp(std::nearbyint(std::ldexp(t, 20)), -20); }

// Truck leg times and cached drone estimates for one instance and estimator.
// Not thread-safe; build one per worker.
class PlanningContext {
 public:
  PlanningContext(const Instance& inst, DroneTimeEstimator est);

  const Instance& instance() const { return *inst_; }
  const DroneTimeEstimator& estimator() const { return est_; }
  double truck(int a, int b) const { return truck_[index2(a, b)]; }
  double drone(int start, int delivery, int end) const;

 private:
  std::size_t index2(int a, int b) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(nodes_) + static_cast<std::size_t>(b);
  }
  const Instance* inst_;
  DroneTimeEstimator est_;
  int nodes_;
  std::vector<double> truck_;
  mutable std::vector<double> drone_;  // NaN until first use
};

// Depot-anchored order with nearest-neighbor construction then first-improvement
// two-opt on truck time. Returned tour is [0, ..., 0].
std::vector<int> initial_tour_two_opt(const Instance& inst, std::uint64_t seed = 0);
std::vector<int> initial_tour_two_opt(const PlanningContext& ctx, std::uint64_t seed = 0);
double tour_truck_time(const PlanningContext& ctx, const std::vector<int>& tour);

// Optimal order-preserving partition of the tour into operations.
struct SplitValue {
  double duration = 0.0;
  int drones = 0;
  double drone_time = 0.0;
};
SplitValue split_value(const PlanningContext& ctx, const std::vector<int>& tour);
Plan split(const PlanningContext& ctx, const std::vector<int>& tour);
Plan split(const Instance& inst, const std::vector<int>& tour, const DroneTimeEstimator& est);

// Relative tolerance for duration ties.
inline constexpr double kTieTolerance = 1e-6;

struct ImproveResult {
  std::vector<int> tour;
  Plan plan;
  int iterations = 0;
  std::vector<double> history;  // duration after each adopted move
};

// Best-improvement over relocate, swap and segment-reversal neighbors.
ImproveResult improve(const PlanningContext& ctx, const std::vector<int>& tour, int budget = 1000);
ImproveResult improve(const Instance& inst, const std::vector<int>& tour, const DroneTimeEstimator& est,
                      int budget = 1000);

// Every delivery order times the optimal split; n <= 7 (SizeError otherwise).
Plan exact_small(const PlanningContext& ctx);
Plan exact_small(const Instance& inst, const DroneTimeEstimator& est);

struct FinalizeOptions {
  bool energy_tiebreak = true;
  bool keep_trajectories = true;
};

// Physics pass: each drone operation gets a coordinated flight landing on the
// truck as it drives its sequence. NoRendezvous names the operation index.
Plan finalize_plan(const Instance& inst, const Plan& plan, const DronePhysicsParams& params,
                   const FinalizeOptions& options = {});

// Truck-only plan on the given tour (one leg per operation).
Plan truck_only_plan(const PlanningContext& ctx, const std::vector<int>& tour);

}  // namespace dronetour
