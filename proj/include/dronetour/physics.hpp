#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dronetour/geometry.hpp"

namespace dronetour {

// Drone kinematic, altitude, energy and discretization limits. Every numeric
// default is an engineering choice; the values are configurable through the
// params JSON file.
struct DronePhysicsParams {
  double v_max = 19.44;         // m/s, horizontal, approximate-l2
  double a_max = 3.0;           // m/s^2, horizontal, approximate-l2
  double climb_max = 5.0;       // m/s
  double descent_max = 3.0;     // m/s
  double h_lo = 0.0;            // m
  double h_hi = 120.0;          // m
  double h_min_airborne = 20.0; // m
  double cruise_alt = 50.0;     // m
  double truck_bed_alt = 1.5;   // m
  double delivery_radius = 2.0; // m
  double dt_minor = 1.0;        // s
  int n_f = 5;
  int t_major = 600;
  std::vector<double> altitude_band_limits = {30.0, 120.0};
  std::vector<double> throttle_band_speeds = {0.0, 7.0, 13.0, 19.44};
  // energy_rate[i][j]: W in altitude band i, throttle band j.
  std::vector<std::vector<double>> energy_rate = {{500.0, 420.0, 350.0, 480.0},
                                                  {520.0, 440.0, 365.0, 500.0}};
  double climb_surplus = 40.0;       // J per meter climbed
  double battery_capacity = 550e3;   // J
  double min_charge = 50e3;          // J
  double big_m = 1e6;
  NormConstants norm{};

  // Throws InvalidArgument naming the first violated invariant.
  void validate() const;

  double energy_budget() const { return battery_capacity - min_charge; }
  // Horizontal clearance kept from every airspace face.
  double ras_clearance() const { return delivery_radius + 0.01; }
};

// Continuous rest-to-rest bang-bang time over `distance`.
double min_time_profile_1d(double distance, double v_max, double a_max);

// Discrete rest-to-rest profile on a dt grid: m steps at +accel, c coasting
// steps, m steps at -accel. Integrating r += v dt + a dt^2/2, v += a dt over
// the steps covers exactly `distance`.
struct DiscreteProfile {
  int steps = 0;
  int ramp = 0;
  double accel = 0.0;
};
DiscreteProfile discrete_rest_to_rest(double distance, double v_max, double a_max, double dt);

// Truck motion sampled on the minor-step grid. Time 0 is the operation start;
// after the last segment the truck stays parked at the final point.
class TimedTruckPath {
 public:
  struct Segment {
    double t0 = 0.0;
    double t1 = 0.0;
    Point2 p0;
    Point2 velocity;
  };
  struct Sample {
    double t = 0.0;
    Point2 position;
    Point2 velocity;
    int segment = -1;  // -1 once parked
  };

  TimedTruckPath() = default;
  // Waypoints joined by straight legs driven at the given speeds
  // (speeds.size() == waypoints.size() - 1).
  TimedTruckPath(const std::vector<Point2>& waypoints, const std::vector<double>& speeds, double dt);
  static TimedTruckPath parked(const Point2& at, double dt);

  double dt() const { return dt_; }
  double arrival_time() const { return segments_.empty() ? 0.0 : segments_.back().t1; }
  const Point2& final_point() const { return final_; }
  const std::vector<Segment>& segments() const { return segments_; }
  // Index of the first sample at which the truck is parked at the end.
  long arrival_sample() const;
  Sample sample(long k) const;

 private:
  std::vector<Segment> segments_;
  Point2 final_;
  double dt_ = 1.0;
};

struct FlightSpec {
  Point3 start;
  Point3 delivery;
  std::variant<Point3, TimedTruckPath> end;
  std::vector<Ras> ras;
};

struct TrajectoryState {
  double t = 0.0;
  Point3 r;
  Point2 v;       // horizontal velocity
  Point2 a;       // horizontal acceleration applied over [t, t + dt)
  double vz = 0.0;  // climb rate (>0) or descent (<0) over [t, t + dt)
  bool airborne = false;
  int alt_band = -1;
  int throttle_band = -1;
  double g = 0.0;  // cumulative energy at t, J
};

struct Trajectory {
  std::vector<TrajectoryState> states;
  std::size_t delivery_step = 0;
  double duration = 0.0;
  double total_energy = 0.0;
  std::optional<long> landing_sample;
  int hover_steps = 0;
};

// Assigns bands and integrates g_{t+1} = g_t + dt (xi vz+_t + eta_ij) over
// airborne states; returns the final cumulative energy. Throws BandError when
// an airborne altitude is above the last band limit.
double energy_of_trajectory(Trajectory& traj, const DronePhysicsParams& params);

// Energy without mutating the trajectory.
double energy_of_trajectory(const Trajectory& traj, const DronePhysicsParams& params);

// Sequenced vertical/horizontal flight from start to delivery to a fixed end
// point. `speed_cap` below v_max flies the horizontal legs slower. Throws
// NoPath or InfeasibleEnergy.
Trajectory plan_drone_only_flight(const FlightSpec& spec, const DronePhysicsParams& params,
                                  std::optional<double> speed_cap = std::nullopt);

struct RendezvousOptions {
  // Among landings reaching the same operation duration, keep the one with
  // least energy (also trying slower cruise speeds instead of hovering).
  bool energy_tiebreak = true;
  // Operation duration on the truck side; landings at or before it tie.
  double truck_time = 0.0;
};

// Earliest feasible landing on the truck along its timed path. The search
// horizon is t_major * n_f minor steps; NoRendezvous when nothing in it works.
Trajectory plan_coordinated_flight(const FlightSpec& spec, const DronePhysicsParams& params,
                                   const RendezvousOptions& options = {});

// Lower bound used by property tests: vertical time budget plus horizontal
// approximate path length at top speed.
double flight_time_lower_bound(const FlightSpec& spec, const DronePhysicsParams& params);

// CSV with header t,x,y,z,vx,vy,vz,b,i,j,g.
std::string trajectory_csv(const Trajectory& traj);

}  // namespace dronetour
