#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dronetour/estimators.hpp"
#include "dronetour/physics.hpp"
#include "dronetour/planner.hpp"
#include "dronetour/predictor.hpp"

namespace dronetour {

struct ScenarioConfig {
  int scenario = 1;  // 1: open area, 2: with restricted airspace
  int n = 20;
  double truck_speed_kmh = 40.0;
  int instance_count = 30;
  double region_side = 5000.0;  // m, square [0, side]^2, depot at the center
  int ras_count_min = 3;
  int ras_count_max = 6;
  double ras_coverage_min = 0.10;  // fraction of the region area
  double ras_coverage_max = 0.20;
  std::uint64_t seed = 1;
  int improve_budget = 1000;
  bool energy_tiebreak = true;

  void validate() const;
  Bounds2 bounds() const { return {0.0, 0.0, region_side, region_side}; }
};

// Stream for (seed, index, purpose); independent of call order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose);

// Axis-aligned boxes, pairwise separated and clear of the depot.
std::vector<Ras> gen_ras(const ScenarioConfig& cfg, std::uint64_t seed, double clearance);

Instance gen_instance(const ScenarioConfig& cfg, int index, const DronePhysicsParams& params = {});

struct Building {
  ConvexPolygon footprint;
  double volume = 0.0;  // m^3
};

struct RegionFile {
  Bounds2 bounds;
  std::vector<Building> buildings;
  std::shared_ptr<const RoadGraph> road;
  std::vector<Ras> ras;

  void validate() const;
};

RegionFile region_from_json(const std::string& text);
std::string region_to_json(const RegionFile& r);

// Street grid with arterial and local speeds, buildings on the blocks, and
// the tallest buildings as restricted airspace.
RegionFile synthetic_region(std::uint64_t seed, double side = 5000.0, double block = 250.0);

// n buildings drawn in proportion to volume without replacement; each
// delivery sits at the closest unused road node to its building (curbside).
Instance sample_case_study(const RegionFile& region, int n, std::uint64_t seed, const DronePhysicsParams& params = {});
std::vector<int> sample_buildings(const RegionFile& region, int n, std::uint64_t seed);

struct MethodResult {
  std::string method;
  bool ok = true;
  std::string error;
  double estimated_duration = 0.0;  // search-time duration under the estimator
  double duration = 0.0;            // finalized
  double dec = 0.0;                 // finalized drone energy, J
  int drone_nodes = 0;
  long airborne_states = 0;
  long ras_violations = 0;  // airborne minor steps inside any airspace
};

struct InstanceResult {
  int index = 0;
  std::vector<MethodResult> methods;
  std::vector<Plan> plans;  // finalized, parallel to methods, when requested
};

struct Comparison {
  std::string metric;  // duration, dec, drone_nodes
  std::string baseline;
  std::string challenger;
  int count = 0;
  int wins = 0;  // instances with baseline > challenger
  double mean_reduction = 0.0;  // mean of (baseline - challenger) / baseline
  double ci_half = 0.0;         // 95% normal approximation
  double mean_baseline = 0.0;
  double mean_challenger = 0.0;
};

struct PhaseTiming {
  double ordering = 0.0;
  double planning = 0.0;  // split and improve
  double finalizing = 0.0;
};

struct ComparisonReport {
  std::string label;  // scenario tag in CSVs
  ScenarioConfig config;
  std::vector<std::string> methods;  // "truck" first
  std::vector<InstanceResult> instances;
  std::vector<Comparison> comparisons;
  PhaseTiming timing;  // wall clock, summed over instances; never written to CSV
};

struct BatteryOptions {
  bool keep_plans = false;
  int workers = 1;
};

using InstanceSource = std::function<Instance(int index)>;

// Per instance: shared two-opt order, truck-only baseline, then for every
// estimator improve and finalize. Failures are recorded per method.
ComparisonReport run_battery(const ScenarioConfig& cfg, const std::vector<DroneTimeEstimator>& estimators,
                             const DronePhysicsParams& params, const BatteryOptions& options = {});
ComparisonReport run_instances(const std::string& label, const ScenarioConfig& cfg, const InstanceSource& source,
                               const std::vector<DroneTimeEstimator>& estimators, const DronePhysicsParams& params,
                               const BatteryOptions& options = {});

std::vector<Comparison> compare_methods(const std::vector<std::string>& methods,
                                        const std::vector<InstanceResult>& instances);

// Every airborne state outside every airspace (margin 0).
long count_ras_violations(const Trajectory& traj, const std::vector<Ras>& ras, long* airborne = nullptr);

std::string results_csv(const std::vector<ComparisonReport>& reports);
std::string aggregate_csv(const std::vector<ComparisonReport>& reports);
// Mean duration reduction against truck speed, one line per node count.
std::string reduction_svg(const std::vector<ComparisonReport>& reports, const std::string& metric,
                          const std::string& baseline, const std::string& challenger);

// Writes results.csv, aggregate.csv and one SVG per compared pair; returns the
// written paths.
std::vector<std::string> emit_report(const std::vector<ComparisonReport>& reports, const std::string& out_dir);

}  // namespace dronetour
