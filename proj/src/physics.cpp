#include "dronetour/physics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include "dronetour/error.hpp"

namespace dronetour {

namespace {

constexpr double kTiny = 1e-9;

int steps_for(double span, double rate, double dt) {
  if (span <= kTiny) return 0;
  return static_cast<int>(std::ceil(span / (rate * dt) - 1e-9));
}

// Appends minor-step states under piecewise-constant controls.
class FlightBuilder {
 public:
  FlightBuilder(const Point3& start, double dt) : dt_(dt) {
    TrajectoryState s;
    s.r = start;
    states_.push_back(s);
  }

  long index() const { return static_cast<long>(states_.size()) - 1; }
  const TrajectoryState& current() const { return states_.back(); }
  int hover_steps() const { return hover_; }

  void step(const Point2& a, double vz) {
    TrajectoryState& s = states_.back();
    s.a = a;
    s.vz = vz;
    TrajectoryState next;
    next.t = s.t + dt_;
    next.r = {s.r.x + s.v.x * dt_ + 0.5 * a.x * dt_ * dt_,
              s.r.y + s.v.y * dt_ + 0.5 * a.y * dt_ * dt_, s.r.z + vz * dt_};
    next.v = s.v + a * dt_;
    next.airborne = true;
    states_.push_back(next);
  }

  void vertical(double z_target, double rate) {
    const double span = z_target - current().r.z;
    const int n = steps_for(std::abs(span), rate, dt_);
    if (n == 0) return;
    const double vz = span / (n * dt_);
    for (int i = 0; i < n; ++i) step({}, vz);
    states_.back().r.z = z_target;
  }

  void hover(long n) {
    for (long i = 0; i < n; ++i) step({}, 0.0);
    hover_ += static_cast<int>(n);
  }

  // Rest-to-rest straight move to q along a precomputed profile.
  void segment(const Point2& q, const DiscreteProfile& prof, double norm_factor) {
    const Point2 p = current().r.xy();
    const double len = distance(p, q);
    if (prof.steps == 0 || len <= 0.0) return;
    const Point2 e = (q - p) * (1.0 / len);
    const double accel = prof.accel / norm_factor;
    for (int i = 0; i < prof.steps; ++i) {
      double sign = 0.0;
      if (i < prof.ramp) sign = 1.0;
      else if (i >= prof.steps - prof.ramp) sign = -1.0;
      step(e * (accel * sign), 0.0);
    }
    states_.back().r.x = q.x;
    states_.back().r.y = q.y;
    states_.back().v = {};
  }

  void land(const Point2& truck_velocity) {
    states_.back().airborne = false;
    states_.back().v = truck_velocity;
  }

  void mark_delivery() { delivery_ = states_.size() - 1; }

  Trajectory finish() {
    Trajectory t;
    t.states = std::move(states_);
    t.delivery_step = delivery_;
    t.duration = t.states.back().t;
    t.hover_steps = hover_;
    return t;
  }

 private:
  std::vector<TrajectoryState> states_;
  double dt_;
  std::size_t delivery_ = 0;
  int hover_ = 0;
};

struct LegPlan {
  Polyline path;
  std::vector<DiscreteProfile> profiles;
  std::vector<double> norm_factors;
  long steps = 0;
};

LegPlan plan_leg(const AvoidanceMap& map, const Point2& a, const Point2& b, double cap,
                 const DronePhysicsParams& params) {
  LegPlan leg;
  if (distance(a, b) <= 0.0) {
    leg.path.points = {a, b};
    leg.profiles.push_back({});
    leg.norm_factors.push_back(1.0);
    return leg;
  }
  leg.path = map.path(a, b);
  for (std::size_t i = 0; i + 1 < leg.path.points.size(); ++i) {
    const Point2 d = leg.path.points[i + 1] - leg.path.points[i];
    const double len = d.norm();
    const double factor = len > 0.0 ? l2_approx_2d(d * (1.0 / len), params.norm) : 1.0;
    const auto prof = discrete_rest_to_rest(len * factor, cap, params.a_max, params.dt_minor);
    leg.profiles.push_back(prof);
    leg.norm_factors.push_back(factor);
    leg.steps += prof.steps;
  }
  return leg;
}

void fly_leg(FlightBuilder& b, const LegPlan& leg) {
  for (std::size_t i = 0; i + 1 < leg.path.points.size(); ++i) {
    b.segment(leg.path.points[i + 1], leg.profiles[i], leg.norm_factors[i]);
  }
}

void check_ras(const Trajectory& traj, const std::vector<Ras>& ras, double margin) {
  for (const auto& s : traj.states) {
    if (!s.airborne) continue;
    for (const auto& q : ras) {
      if (point_in_ras(s.r, q, margin)) {
        throw NoPath("trajectory enters airspace " + q.id() + " at t=" + std::to_string(s.t));
      }
    }
  }
}

void finalize(Trajectory& traj, const FlightSpec& spec, const DronePhysicsParams& params) {
  check_ras(traj, spec.ras, params.delivery_radius);
  energy_of_trajectory(traj, params);
  if (traj.total_energy > params.energy_budget()) {
    throw InfeasibleEnergy("flight needs " + std::to_string(traj.total_energy) +
                           " J, budget is " + std::to_string(params.energy_budget()) + " J");
  }
}

// Take-off, outbound leg, delivery and re-climb; ends at cruise above P.
FlightBuilder outbound(const FlightSpec& spec, const DronePhysicsParams& params,
                       const AvoidanceMap& map, double cap) {
  FlightBuilder b(spec.start, params.dt_minor);
  b.vertical(params.cruise_alt, params.climb_max);
  fly_leg(b, plan_leg(map, spec.start.xy(), spec.delivery.xy(), cap, params));
  b.vertical(spec.delivery.z, params.descent_max);
  b.mark_delivery();
  b.vertical(params.cruise_alt, params.climb_max);
  return b;
}

}  // namespace

void DronePhysicsParams::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("physics params: " + what); };
  if (!(v_max > 0.0) || !(a_max > 0.0)) fail("v_max and a_max must be positive");
  if (!(climb_max > 0.0) || !(descent_max > 0.0)) fail("climb and descent rates must be positive");
  if (!(0.0 <= h_lo && h_lo <= h_min_airborne && h_min_airborne <= cruise_alt && cruise_alt <= h_hi)) {
    fail("need 0 <= h_lo <= h_min_airborne <= cruise_alt <= h_hi");
  }
  if (truck_bed_alt < 0.0 || truck_bed_alt > cruise_alt) fail("truck_bed_alt outside [0, cruise_alt]");
  if (delivery_radius < 0.0) fail("delivery_radius must be nonnegative");
  if (!(dt_minor > 0.0)) fail("dt_minor must be positive");
  if (n_f < 1) fail("n_f must be at least 1");
  if (t_major < 1) fail("t_major must be at least 1");
  if (altitude_band_limits.empty()) fail("need at least one altitude band");
  for (std::size_t i = 0; i < altitude_band_limits.size(); ++i) {
    const double lo = i == 0 ? 0.0 : altitude_band_limits[i - 1];
    if (!(altitude_band_limits[i] > lo)) fail("altitude band limits must increase from 0");
  }
  if (throttle_band_speeds.empty()) fail("need at least one throttle band");
  for (std::size_t j = 1; j < throttle_band_speeds.size(); ++j) {
    if (!(throttle_band_speeds[j] > throttle_band_speeds[j - 1])) {
      fail("throttle band speeds must strictly increase");
    }
  }
  if (std::abs(throttle_band_speeds.back() - v_max) > 1e-9) fail("largest throttle band speed must equal v_max");
  if (energy_rate.size() != altitude_band_limits.size()) fail("energy_rate needs one row per altitude band");
  for (const auto& row : energy_rate) {
    if (row.size() != throttle_band_speeds.size()) fail("energy_rate needs one column per throttle band");
    for (double e : row) {
      if (!(e > 0.0)) fail("energy rates must be positive");
    }
  }
  if (climb_surplus < 0.0) fail("climb_surplus must be nonnegative");
  if (!(battery_capacity > min_charge)) fail("battery_capacity must exceed min_charge");
  if (!(big_m > 0.0)) fail("big_m must be positive");
}

double min_time_profile_1d(double distance, double v_max, double a_max) {
  if (distance <= 0.0) return 0.0;
  if (distance < v_max * v_max / a_max) return 2.0 * std::sqrt(distance / a_max);
  return distance / v_max + v_max / a_max;
}

DiscreteProfile discrete_rest_to_rest(double distance, double v_max, double a_max, double dt) {
  if (distance <= 0.0) return {};
  const double t_cont = min_time_profile_1d(distance, v_max, a_max);
  // Ramp length where the speed cap starts to bind.
  const double m_star = v_max / (a_max * dt);
  for (long n = std::max(2L, static_cast<long>(std::floor(t_cont / dt)));; ++n) {
    int best_m = 0;
    double best = -1.0;
    const long half = n / 2;
    const long cands[] = {1, static_cast<long>(std::floor(m_star)), static_cast<long>(std::ceil(m_star)), half};
    for (long m : cands) {
      m = std::clamp(m, 1L, half);
      const double accel = std::min(a_max, v_max / (static_cast<double>(m) * dt));
      const double reach = accel * static_cast<double>(m * (n - m)) * dt * dt;
      if (reach > best) {
        best = reach;
        best_m = static_cast<int>(m);
      }
    }
    if (best >= distance) {
      DiscreteProfile p;
      p.steps = static_cast<int>(n);
      p.ramp = best_m;
      p.accel = distance / (static_cast<double>(best_m) * static_cast<double>(n - best_m) * dt * dt);
      return p;
    }
  }
}

TimedTruckPath::TimedTruckPath(const std::vector<Point2>& waypoints, const std::vector<double>& speeds,
                               double dt)
    : dt_(dt) {
  if (waypoints.empty()) throw InvalidArgument("truck path needs at least one waypoint");
  if (speeds.size() + 1 != waypoints.size()) throw InvalidArgument("truck path needs one speed per leg");
  if (!(dt > 0.0)) throw InvalidArgument("truck path dt must be positive");
  double t = 0.0;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Point2 d = waypoints[i + 1] - waypoints[i];
    const double len = d.norm();
    if (len <= 0.0) continue;
    if (!(speeds[i] > 0.0)) throw InvalidArgument("truck leg speed must be positive");
    const double dur = len / speeds[i];
    segments_.push_back({t, t + dur, waypoints[i], d * (speeds[i] / len)});
    t += dur;
  }
  final_ = waypoints.back();
}

TimedTruckPath TimedTruckPath::parked(const Point2& at, double dt) { return TimedTruckPath({at}, {}, dt); }

long TimedTruckPath::arrival_sample() const {
  return static_cast<long>(std::ceil(arrival_time() / dt_ - 1e-9));
}

TimedTruckPath::Sample TimedTruckPath::sample(long k) const {
  Sample s;
  s.t = static_cast<double>(k) * dt_;
  if (k >= arrival_sample()) {
    s.position = final_;
    return s;
  }
  if (k <= 0) {
    // The drone launches while the truck is at rest at the start node.
    s.position = segments_.front().p0;
    s.segment = 0;
    return s;
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), s.t,
                             [](double t, const Segment& seg) { return t < seg.t1; });
  if (it == segments_.end()) --it;
  s.segment = static_cast<int>(it - segments_.begin());
  s.position = it->p0 + it->velocity * (s.t - it->t0);
  s.velocity = it->velocity;
  return s;
}

double energy_of_trajectory(Trajectory& traj, const DronePhysicsParams& params) {
  const auto& H = params.altitude_band_limits;
  const auto& theta = params.throttle_band_speeds;
  double g = 0.0;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    auto& s = traj.states[k];
    s.g = g;
    s.alt_band = -1;
    s.throttle_band = -1;
    if (s.airborne) {
      int i = 0;
      while (i < static_cast<int>(H.size()) && s.r.z > H[static_cast<std::size_t>(i)] + kTiny) ++i;
      if (i == static_cast<int>(H.size())) {
        throw BandError("altitude " + std::to_string(s.r.z) + " m above the last band limit");
      }
      const double speed = l2_approx_2d(s.v, params.norm);
      int j = 0;
      for (int c = 1; c < static_cast<int>(theta.size()); ++c) {
        if (std::abs(theta[static_cast<std::size_t>(c)] - speed) <
            std::abs(theta[static_cast<std::size_t>(j)] - speed)) {
          j = c;
        }
      }
      s.alt_band = i;
      s.throttle_band = j;
    }
    if (k + 1 < traj.states.size()) {
      double rate = params.climb_surplus * std::max(s.vz, 0.0);
      if (s.airborne) rate += params.energy_rate[static_cast<std::size_t>(s.alt_band)][static_cast<std::size_t>(s.throttle_band)];
      g += params.dt_minor * rate;
    }
  }
  traj.total_energy = g;
  return g;
}

double energy_of_trajectory(const Trajectory& traj, const DronePhysicsParams& params) {
  Trajectory copy = traj;
  return energy_of_trajectory(copy, params);
}

Trajectory plan_drone_only_flight(const FlightSpec& spec, const DronePhysicsParams& params,
                                  std::optional<double> speed_cap) {
  const auto* end = std::get_if<Point3>(&spec.end);
  if (end == nullptr) throw InvalidArgument("drone-only flight needs a fixed end point");
  const double cap = std::min(params.v_max, speed_cap.value_or(params.v_max));
  if (!(cap > 0.0)) throw InvalidArgument("speed cap must be positive");
  const AvoidanceMap map(spec.ras, params.ras_clearance(), params.cruise_alt);
  FlightBuilder b = outbound(spec, params, map, cap);
  fly_leg(b, plan_leg(map, spec.delivery.xy(), end->xy(), cap, params));
  b.vertical(end->z, params.descent_max);
  b.land({});
  Trajectory traj = b.finish();
  traj.landing_sample = static_cast<long>(traj.states.size()) - 1;
  finalize(traj, spec, params);
  return traj;
}

namespace {

// Landing at sample k: the last `descent_steps` steps track the truck down
// from cruise, after `ramp` steps accelerating from rest at `hold` to match
// the truck's velocity at sample j.
struct LandingForm {
  long j = 0;
  long k = 0;
  Point2 meet;
  Point2 velocity;
  Point2 hold;
  int ramp = 0;
};

std::optional<LandingForm> landing_form(const TimedTruckPath& truck, long k, int descent_steps,
                                        const DronePhysicsParams& params) {
  LandingForm f;
  f.k = k;
  f.j = k - descent_steps;
  if (f.j < 0) return std::nullopt;
  const auto sj = truck.sample(f.j);
  const auto sk = truck.sample(k);
  if (sj.segment != sk.segment) return std::nullopt;
  f.meet = sj.position;
  f.velocity = sj.velocity;
  const double speed = f.velocity.norm();
  if (speed <= 0.0) {
    f.hold = f.meet;
    return f;
  }
  if (l2_approx_2d(f.velocity, params.norm) > params.v_max + kTiny) return std::nullopt;
  f.ramp = static_cast<int>(std::ceil(l2_approx_2d(f.velocity, params.norm) / (params.a_max * params.dt_minor) - 1e-9));
  const Point2 e = f.velocity * (1.0 / speed);
  f.hold = f.meet - e * (speed * f.ramp * params.dt_minor / 2.0);
  return f;
}

// Completes the outbound prefix into a landing of the given form, or returns
// nothing when the drone cannot make it or the result is infeasible.
std::optional<Trajectory> complete_landing(const FlightBuilder& prefix, const LandingForm& form,
                                           const FlightSpec& spec, const DronePhysicsParams& params,
                                           const AvoidanceMap& map, double cap, int descent_steps) {
  LegPlan leg;
  try {
    leg = plan_leg(map, spec.delivery.xy(), form.hold, cap, params);
  } catch (const NoPath&) {
    return std::nullopt;
  }
  const long wait = form.j - form.ramp - (prefix.index() + leg.steps);
  if (wait < 0) return std::nullopt;
  FlightBuilder b = prefix;
  fly_leg(b, leg);
  b.hover(wait);
  if (form.ramp > 0) {
    const Point2 accel = form.velocity * (1.0 / (form.ramp * params.dt_minor));
    for (int i = 0; i < form.ramp; ++i) b.step(accel, 0.0);
  }
  const double vz = (params.truck_bed_alt - params.cruise_alt) / (descent_steps * params.dt_minor);
  for (int i = 0; i < descent_steps; ++i) b.step({}, vz);
  b.land(form.velocity);
  Trajectory traj = b.finish();
  traj.states.back().r.z = params.truck_bed_alt;
  traj.landing_sample = form.k;
  try {
    finalize(traj, spec, params);
  } catch (const NoPath&) {
    return std::nullopt;
  } catch (const InfeasibleEnergy&) {
    return std::nullopt;
  }
  return traj;
}

}  // namespace

Trajectory plan_coordinated_flight(const FlightSpec& spec, const DronePhysicsParams& params,
                                   const RendezvousOptions& options) {
  const auto* truck = std::get_if<TimedTruckPath>(&spec.end);
  if (truck == nullptr) throw InvalidArgument("coordinated flight needs a timed truck path");
  const AvoidanceMap map(spec.ras, params.ras_clearance(), params.cruise_alt);
  const int descent_steps =
      std::max(1, steps_for(params.cruise_alt - params.truck_bed_alt, params.descent_max, params.dt_minor));
  const long horizon = static_cast<long>(params.t_major) * params.n_f;
  const long parked_from = truck->arrival_sample() + descent_steps;

  std::vector<double> caps = {params.v_max};
  for (auto it = params.throttle_band_speeds.rbegin(); it != params.throttle_band_speeds.rend(); ++it) {
    if (*it > 0.0 && *it < params.v_max - kTiny) caps.push_back(*it);
  }

  // Landings are tried in increasing time. Moving-truck landings are scanned
  // sample by sample; once the truck is parked for the whole descent the
  // earliest landing follows directly from the leg time.
  auto search = [&](double cap, long k_from, long k_to, bool first_only,
                    const std::function<void(Trajectory&&)>& accept) {
    FlightBuilder prefix = outbound(spec, params, map, cap);
    const long ready = prefix.index();
    const long k_start = std::max(k_from, ready + descent_steps + 1);
    for (long k = k_start; k <= std::min(k_to, parked_from - 1); ++k) {
      const auto form = landing_form(*truck, k, descent_steps, params);
      if (!form) continue;
      const double gap = l2_approx_2d(form->hold - spec.delivery.xy(), params.norm);
      const double lower = min_time_profile_1d(gap, cap, params.a_max) / params.dt_minor;
      if (static_cast<double>(ready) + lower + form->ramp > static_cast<double>(form->j) + 1e-9) continue;
      if (auto t = complete_landing(prefix, *form, spec, params, map, cap, descent_steps)) {
        accept(std::move(*t));
        if (first_only) return;
      }
    }
    LegPlan home;
    try {
      home = plan_leg(map, spec.delivery.xy(), truck->final_point(), cap, params);
    } catch (const NoPath&) {
      return;
    }
    for (long k = std::max({k_start, parked_from, ready + home.steps + descent_steps}); k <= k_to; ++k) {
      const auto form = landing_form(*truck, k, descent_steps, params);
      if (!form) continue;
      if (auto t = complete_landing(prefix, *form, spec, params, map, cap, descent_steps)) {
        accept(std::move(*t));
        if (first_only) return;
      } else {
        return;  // later parked landings only add hover
      }
    }
  };

  std::optional<Trajectory> first;
  search(params.v_max, 0, horizon - 1, true, [&](Trajectory&& t) { first = std::move(t); });
  if (!first) throw NoRendezvous("no feasible landing on the truck within the horizon");
  if (!options.energy_tiebreak) return *first;

  const double target = std::max(options.truck_time, first->duration);
  const long k_last = std::min(horizon - 1, static_cast<long>(std::floor(target / params.dt_minor + 1e-9)));
  Trajectory best = *first;
  for (double cap : caps) {
    search(cap, 0, k_last, false, [&](Trajectory&& t) {
      const bool better = t.total_energy < best.total_energy - 1e-9 ||
                          (std::abs(t.total_energy - best.total_energy) <= 1e-9 && t.duration < best.duration);
      if (better) best = std::move(t);
    });
  }
  return best;
}

double flight_time_lower_bound(const FlightSpec& spec, const DronePhysicsParams& params) {
  const Point2 d = spec.delivery.xy();
  auto gap = [&](const Point2& q) { return l2_approx_2d(q - d, params.norm); };
  double back = 0.0;
  double end_z = params.truck_bed_alt;
  if (const auto* p = std::get_if<Point3>(&spec.end)) {
    back = gap(p->xy());
    end_z = p->z;
  } else {
    // Landing can happen anywhere along the route; take the closest point.
    const auto& truck = std::get<TimedTruckPath>(spec.end);
    back = gap(truck.final_point());
    for (const auto& seg : truck.segments()) {
      const Point2 span = seg.velocity * (seg.t1 - seg.t0);
      double lo = 0.0, hi = 1.0;  // the blended norm is convex along the segment
      for (int it = 0; it < 100; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (gap(seg.p0 + span * m1) < gap(seg.p0 + span * m2)) hi = m2;
        else lo = m1;
      }
      back = std::min({back, gap(seg.p0), gap(seg.p0 + span), gap(seg.p0 + span * lo)});
    }
  }
  const double h = params.cruise_alt;
  const double vertical = (h - spec.start.z) / params.climb_max + (h - spec.delivery.z) / params.descent_max +
                          (h - spec.delivery.z) / params.climb_max + (h - end_z) / params.descent_max;
  return vertical + (gap(spec.start.xy()) + back) / params.v_max;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "t,x,y,z,vx,vy,vz,b,i,j,g\n";
  char buf[320];
  for (const auto& s : traj.states) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d,%d,%.3f\n", s.t, s.r.x, s.r.y,
                  s.r.z, s.v.x, s.v.y, s.vz, s.airborne ? 1 : 0, s.alt_band, s.throttle_band, s.g);
    out << buf;
  }
  return out.str();
}

}  // namespace dronetour
