#include "dronetour/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "dronetour/error.hpp"

namespace dronetour {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool tie(double a, double b) { return std::abs(a - b) <= kTieTolerance * std::max(std::abs(a), std::abs(b)); }

// Road node path as drivable waypoints; per-segment speeds reproduce the
// edge travel times even where an edge is longer than its chord.
TruckLegPath road_leg(const RoadGraph& g, int from, int to) {
  TruckLegPath out;
  const TruckRoute route = shortest_truck_path(g, from, to);
  out.time = route.time;
  for (int v : route.nodes) out.waypoints.push_back(g.nodes()[static_cast<std::size_t>(v)]);
  for (std::size_t s = 0; s + 1 < route.nodes.size(); ++s) {
    double best = kInf;
    for (const auto& arc : g.out(route.nodes[s])) {
      if (arc.to == route.nodes[s + 1]) best = std::min(best, arc.time);
    }
    const double chord = distance(out.waypoints[s], out.waypoints[s + 1]);
    out.speeds.push_back(best > 0.0 && chord > 0.0 ? chord / best : 1.0);
  }
  return out;
}

}  // namespace

void Instance::validate() const {
  if (!(truck_speed > 0.0)) throw InvalidArgument("truck speed must be positive");
  if (!ids.empty() && ids.size() != deliveries.size()) throw InvalidArgument("ids must parallel deliveries");
  std::set<std::pair<double, double>> seen;
  const AvoidanceMap map(ras, clearance, 0.0);
  for (int v = 0; v < node_count(); ++v) {
    const Point2& p = coord(v);
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidArgument("node " + std::to_string(v) + " is not finite");
    if (!seen.insert({p.x, p.y}).second) throw InvalidArgument("node " + std::to_string(v) + " duplicates another node");
    if (map.enclosed(p)) throw InvalidArgument("node " + std::to_string(v) + " lies inside a restricted airspace");
  }
  if (mode == TravelMode::kRoad) {
    if (!road) throw InvalidArgument("road mode needs a road graph");
    if (anchors.size() != static_cast<std::size_t>(node_count())) throw InvalidArgument("road mode needs one anchor per node");
    for (int a : anchors) {
      if (a < 0 || static_cast<std::size_t>(a) >= road->size()) throw InvalidArgument("anchor outside the road graph");
    }
  }
}

int Plan::drone_count() const {
  return static_cast<int>(std::count_if(operations.begin(), operations.end(),
                                        [](const Operation& o) { return o.drone_node.has_value(); }));
}

double Plan::drone_time_estimate() const {
  double s = 0.0;
  for (const auto& o : operations) s += o.t_drone_est;
  return s;
}

std::vector<int> Plan::tour() const {
  std::vector<int> out;
  for (const auto& o : operations) {
    if (out.empty()) out.push_back(o.start);
    // The drone node is listed right after the operation start.
    if (o.drone_node) out.push_back(*o.drone_node);
    out.insert(out.end(), o.truck_seq.begin(), o.truck_seq.end());
    out.push_back(o.end);
  }
  return out;
}

TruckLegPath truck_leg_path(const Instance& inst, int a, int b) {
  if (a < 0 || b < 0 || a >= inst.node_count() || b >= inst.node_count()) throw InvalidArgument("node out of range");
  if (inst.mode == TravelMode::kRoad) {
    TruckLegPath leg = road_leg(*inst.road, inst.anchors[static_cast<std::size_t>(a)],
                                inst.anchors[static_cast<std::size_t>(b)]);
    if (leg.waypoints.empty() || leg.waypoints.size() == 1) {
      leg.waypoints = {inst.coord(a), inst.coord(b)};
      leg.speeds = {inst.truck_speed};
    }
    return leg;
  }
  TruckLegPath leg;
  if (a == b) {
    leg.waypoints = {inst.coord(a)};
    return leg;
  }
  if (inst.ras.empty()) {
    leg.waypoints = {inst.coord(a), inst.coord(b)};
  } else {
    leg.waypoints = avoidance_path_2d(inst.coord(a), inst.coord(b), inst.ras, inst.clearance, 0.0).points;
  }
  double len = 0.0;
  for (std::size_t s = 0; s + 1 < leg.waypoints.size(); ++s) {
    len += distance(leg.waypoints[s], leg.waypoints[s + 1]);
    leg.speeds.push_back(inst.truck_speed);
  }
  leg.time = len / inst.truck_speed;
  return leg;
}

double truck_leg_time(const Instance& inst, int a, int b) {
  if (a == b) return 0.0;
  if (inst.mode == TravelMode::kEuclidean && inst.ras.empty()) return distance(inst.coord(a), inst.coord(b)) / inst.truck_speed;
  return truck_leg_path(inst, a, b).time;
}

PlanningContext::PlanningContext(const Instance& inst, DroneTimeEstimator est)
    : inst_(&inst), est_(std::move(est)), nodes_(inst.node_count()) {
  const auto n = static_cast<std::size_t>(nodes_);
  truck_.assign(n * n, 0.0);
  if (inst.mode == TravelMode::kRoad) {
    if (!inst.road || inst.anchors.size() != n) throw InvalidArgument("road mode needs a road graph and anchors");
    for (int a = 0; a < nodes_; ++a) {
      const auto times = truck_times_from(*inst.road, inst.anchors[static_cast<std::size_t>(a)]);
      for (int b = 0; b < nodes_; ++b) {
        const double t = times[static_cast<std::size_t>(inst.anchors[static_cast<std::size_t>(b)])];
        if (!std::isfinite(t)) throw NoPath("no road route from node " + std::to_string(a) + " to " + std::to_string(b));
        truck_[index2(a, b)] = a == b ? 0.0 : t;
      }
    }
  } else if (inst.ras.empty()) {
    for (int a = 0; a < nodes_; ++a) {
      for (int b = 0; b < nodes_; ++b) truck_[index2(a, b)] = distance(inst.coord(a), inst.coord(b)) / inst.truck_speed;
    }
  } else {
    const AvoidanceMap map(inst.ras, inst.clearance, 0.0);
    for (int a = 0; a < nodes_; ++a) {
      for (int b = a + 1; b < nodes_; ++b) {
        const double t = map.path(inst.coord(a), inst.coord(b)).length() / inst.truck_speed;
        truck_[index2(a, b)] = t;
        truck_[index2(b, a)] = t;
      }
    }
  }
  for (double& t : truck_) t = on_time_grid(t);
  drone_.assign(n * n * n, std::numeric_limits<double>::quiet_NaN());
}

double PlanningContext::drone(int start, int delivery, int end) const {
  const std::size_t idx = index2(start, delivery) * static_cast<std::size_t>(nodes_) + static_cast<std::size_t>(end);
  double& slot = drone_[idx];
  if (std::isnan(slot)) slot = on_time_grid(est_.estimate(inst_->coord(start), inst_->coord(delivery), inst_->coord(end)));
  return slot;
}

double tour_truck_time(const PlanningContext& ctx, const std::vector<int>& tour) {
  double t = 0.0;
  for (std::size_t p = 0; p + 1 < tour.size(); ++p) t += ctx.truck(tour[p], tour[p + 1]);
  return t;
}

std::vector<int> initial_tour_two_opt(const PlanningContext& ctx, std::uint64_t seed) {
  const int n = ctx.instance().n();
  if (n < 1) throw InvalidArgument("tour needs at least one delivery");
  std::vector<int> tour{0};
  std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
  used[0] = 1;
  if (seed != 0) {
    // A nonzero seed picks the first stop; the rest stays nearest-neighbor.
    std::mt19937_64 rng(seed);
    const int first = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    tour.push_back(first);
    used[static_cast<std::size_t>(first)] = 1;
  }
  while (static_cast<int>(tour.size()) < n + 1) {
    int best = -1;
    double bt = kInf;
    for (int v = 1; v <= n; ++v) {
      if (used[static_cast<std::size_t>(v)] != 0) continue;
      const double t = ctx.truck(tour.back(), v);
      if (t < bt) {
        bt = t;
        best = v;
      }
    }
    used[static_cast<std::size_t>(best)] = 1;
    tour.push_back(best);
  }
  tour.push_back(0);

  // First improvement; reversal cost is recomputed so asymmetric road times stay exact.
  const int m = n + 1;
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 1; i < m - 1; ++i) {
      for (int j = i + 1; j < m; ++j) {
        double before = ctx.truck(tour[i - 1], tour[i]) + ctx.truck(tour[j], tour[j + 1]);
        double after = ctx.truck(tour[i - 1], tour[j]) + ctx.truck(tour[i], tour[j + 1]);
        for (int p = i; p < j; ++p) {
          before += ctx.truck(tour[p], tour[p + 1]);
          after += ctx.truck(tour[p + 1], tour[p]);
        }
        if (after < before - 1e-9 * std::max(1.0, before)) {
          std::reverse(tour.begin() + i, tour.begin() + j + 1);
          improved = true;
        }
      }
    }
  }
  return tour;
}

std::vector<int> initial_tour_two_opt(const Instance& inst, std::uint64_t seed) {
  const PlanningContext ctx(inst, DroneTimeEstimator::straight_line());
  return initial_tour_two_opt(ctx, seed);
}

namespace {

void check_tour(const PlanningContext& ctx, const std::vector<int>& tour) {
  const int n = ctx.instance().n();
  if (static_cast<int>(tour.size()) != n + 2 || tour.front() != 0 || tour.back() != 0) {
    throw InvalidArgument("tour must list every delivery once between two depot visits");
  }
  std::vector<char> seen(static_cast<std::size_t>(n + 1), 0);
  for (int p = 1; p <= n; ++p) {
    const int v = tour[static_cast<std::size_t>(p)];
    if (v < 1 || v > n || seen[static_cast<std::size_t>(v)] != 0) throw InvalidArgument("tour is not a permutation");
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

struct Arc {
  int k;  // drone position
  int j;
  double weight;
  double drone;
};

struct SplitState {
  std::vector<double> value;
  std::vector<int> drones;
  std::vector<double> drone_time;
  std::vector<int> from;
  std::vector<int> via;  // drone position, -1 for a truck leg
  std::vector<double> est;
};

// Forward DP over tour positions. Truck-only stretches are chained single
// legs. A drone arc (i, k, j) is dropped when some m in (k, j) already has the
// drone no slower than the truck on (i, k, m): the arc then costs at least as
// much as (i, k, m) followed by truck legs. Symmetrically for some m in (i, k)
// on the left.
void run_split(const PlanningContext& ctx, const std::vector<int>& tour, SplitState& st) {
  const int m = static_cast<int>(tour.size()) - 1;
  std::vector<double> leg(static_cast<std::size_t>(m));
  for (int p = 0; p < m; ++p) leg[static_cast<std::size_t>(p)] = ctx.truck(tour[static_cast<std::size_t>(p)], tour[static_cast<std::size_t>(p + 1)]);

  std::vector<std::vector<Arc>> out(static_cast<std::size_t>(m + 1));
  std::vector<int> leftcut(static_cast<std::size_t>(m + 1));
  for (int k = 1; k < m; ++k) {
    std::fill(leftcut.begin(), leftcut.end(), -1);
    int open = m - k;  // ends j not yet covered by a left cut
    const double bridge = ctx.truck(tour[static_cast<std::size_t>(k - 1)], tour[static_cast<std::size_t>(k + 1)]);
    for (int i = k - 1; i >= 0 && open > 0; --i) {
      double tt = 0.0;
      for (int p = i; p < k - 1; ++p) tt += leg[static_cast<std::size_t>(p)];
      tt += bridge;
      for (int j = k + 1; j <= m; ++j) {
        if (j > k + 1) tt += leg[static_cast<std::size_t>(j - 1)];
        if (leftcut[static_cast<std::size_t>(j)] >= 0) continue;
        const double e = ctx.drone(tour[static_cast<std::size_t>(i)], tour[static_cast<std::size_t>(k)], tour[static_cast<std::size_t>(j)]);
        out[static_cast<std::size_t>(i)].push_back({k, j, std::max(tt, e), e});
        if (e <= tt) {
          if (i > 0) {
            leftcut[static_cast<std::size_t>(j)] = i;
            --open;
          }
          break;
        }
      }
    }
  }

  st.value.assign(static_cast<std::size_t>(m + 1), kInf);
  st.drones.assign(static_cast<std::size_t>(m + 1), 0);
  st.drone_time.assign(static_cast<std::size_t>(m + 1), 0.0);
  st.from.assign(static_cast<std::size_t>(m + 1), -1);
  st.via.assign(static_cast<std::size_t>(m + 1), -1);
  st.est.assign(static_cast<std::size_t>(m + 1), 0.0);
  st.value[0] = 0.0;
  auto relax = [&](int i, int j, int k, double w, double e) {
    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    const double cand = st.value[ui] + w;
    const int dc = st.drones[ui] + (k >= 0 ? 1 : 0);
    if (cand < st.value[uj] || (cand == st.value[uj] && dc < st.drones[uj])) {
      st.value[uj] = cand;
      st.drones[uj] = dc;
      st.drone_time[uj] = st.drone_time[ui] + (k >= 0 ? e : 0.0);
      st.from[uj] = i;
      st.via[uj] = k;
      st.est[uj] = e;
    }
  };
  for (int i = 0; i < m; ++i) {
    relax(i, i + 1, -1, leg[static_cast<std::size_t>(i)], 0.0);
    for (const Arc& a : out[static_cast<std::size_t>(i)]) relax(i, a.j, a.k, a.weight, a.drone);
  }
}

}  // namespace

SplitValue split_value(const PlanningContext& ctx, const std::vector<int>& tour) {
  check_tour(ctx, tour);
  SplitState st;
  run_split(ctx, tour, st);
  const auto m = tour.size() - 1;
  return {st.value[m], st.drones[m], st.drone_time[m]};
}

Plan split(const PlanningContext& ctx, const std::vector<int>& tour) {
  check_tour(ctx, tour);
  SplitState st;
  run_split(ctx, tour, st);
  const int m = static_cast<int>(tour.size()) - 1;
  std::vector<Operation> ops;
  for (int j = m; j > 0;) {
    const int i = st.from[static_cast<std::size_t>(j)];
    const int k = st.via[static_cast<std::size_t>(j)];
    Operation op;
    op.start = tour[static_cast<std::size_t>(i)];
    op.end = tour[static_cast<std::size_t>(j)];
    for (int p = i + 1; p < j; ++p) {
      if (p == k) {
        op.drone_node = tour[static_cast<std::size_t>(p)];
      } else {
        op.truck_seq.push_back(tour[static_cast<std::size_t>(p)]);
      }
    }
    op.t_o = st.value[static_cast<std::size_t>(j)] - st.value[static_cast<std::size_t>(i)];
    double tt = 0.0;
    int prev = op.start;
    for (int v : op.truck_seq) {
      tt += ctx.truck(prev, v);
      prev = v;
    }
    op.t_truck = tt + ctx.truck(prev, op.end);
    if (op.drone_node) {
      op.t_drone_est = st.est[static_cast<std::size_t>(j)];
      op.t_o = std::max(op.t_truck, op.t_drone_est);
    } else {
      op.t_o = op.t_truck;
    }
    ops.push_back(std::move(op));
    j = i;
  }
  std::reverse(ops.begin(), ops.end());
  Plan plan;
  plan.operations = std::move(ops);
  plan.total_duration = st.value[static_cast<std::size_t>(m)];
  return plan;
}

Plan split(const Instance& inst, const std::vector<int>& tour, const DroneTimeEstimator& est) {
  const PlanningContext ctx(inst, est);
  return split(ctx, tour);
}

Plan truck_only_plan(const PlanningContext& ctx, const std::vector<int>& tour) {
  check_tour(ctx, tour);
  Plan plan;
  for (std::size_t p = 0; p + 1 < tour.size(); ++p) {
    Operation op;
    op.start = tour[p];
    op.end = tour[p + 1];
    op.t_truck = ctx.truck(op.start, op.end);
    op.t_o = op.t_truck;
    plan.total_duration += op.t_o;
    plan.operations.push_back(std::move(op));
  }
  plan.verified = true;
  return plan;
}

namespace {

struct Candidate {
  SplitValue value;
  std::vector<int> tour;
};

// (duration within tolerance, then fewer drones, then lexicographic tour).
bool better(const SplitValue& a, const std::vector<int>& ta, const SplitValue& b, const std::vector<int>& tb) {
  if (!tie(a.duration, b.duration)) return a.duration < b.duration;
  if (a.drones != b.drones) return a.drones < b.drones;
  return ta < tb;
}

}  // namespace

ImproveResult improve(const PlanningContext& ctx, const std::vector<int>& tour, int budget) {
  check_tour(ctx, tour);
  ImproveResult res;
  res.tour = tour;
  SplitValue cur = split_value(ctx, tour);
  const int n = ctx.instance().n();
  std::vector<int> nb(tour.size());
  for (int it = 0; it < budget; ++it) {
    Candidate best{cur, res.tour};
    bool found = false;
    auto consider = [&]() {
      const SplitValue v = split_value(ctx, nb);
      if (better(v, nb, best.value, best.tour)) {
        best.value = v;
        best.tour = nb;
        found = true;
      }
    };
    const auto& t = res.tour;
    // Relocate the node at position a to position b.
    for (int a = 1; a <= n; ++a) {
      for (int b = 1; b <= n; ++b) {
        if (b == a || b == a - 1) continue;
        nb = t;
        const int v = nb[static_cast<std::size_t>(a)];
        nb.erase(nb.begin() + a);
        nb.insert(nb.begin() + b, v);
        consider();
      }
    }
    for (int a = 1; a <= n; ++a) {
      for (int b = a + 1; b <= n; ++b) {
        nb = t;
        std::swap(nb[static_cast<std::size_t>(a)], nb[static_cast<std::size_t>(b)]);
        consider();
      }
    }
    for (int a = 1; a <= n; ++a) {
      for (int b = a + 2; b <= n; ++b) {
        nb = t;
        std::reverse(nb.begin() + a, nb.begin() + b + 1);
        consider();
      }
    }
    // Adopt only a strict gain: shorter beyond tolerance, or tied with fewer drones.
    const bool shorter = best.value.duration < cur.duration && !tie(best.value.duration, cur.duration);
    const bool leaner = tie(best.value.duration, cur.duration) && best.value.drones < cur.drones;
    const bool gain = found && (shorter || leaner);
    if (!gain) break;
    res.tour = best.tour;
    cur = best.value;
    res.history.push_back(cur.duration);
    res.iterations = it + 1;
  }
  res.plan = split(ctx, res.tour);
  return res;
}

ImproveResult improve(const Instance& inst, const std::vector<int>& tour, const DroneTimeEstimator& est, int budget) {
  const PlanningContext ctx(inst, est);
  return improve(ctx, tour, budget);
}

Plan exact_small(const PlanningContext& ctx) {
  const int n = ctx.instance().n();
  if (n > 7) throw SizeError("exhaustive search is limited to 7 deliveries, got " + std::to_string(n));
  if (n < 1) throw InvalidArgument("instance has no deliveries");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 1);
  std::vector<int> best_tour;
  SplitValue best{};
  std::vector<int> tour(static_cast<std::size_t>(n + 2), 0);
  do {
    std::copy(order.begin(), order.end(), tour.begin() + 1);
    const SplitValue v = split_value(ctx, tour);
    const bool take = best_tour.empty() || (!tie(v.duration, best.duration) && v.duration < best.duration) ||
                      (tie(v.duration, best.duration) && v.drone_time < best.drone_time);
    if (take) {
      best = v;
      best_tour = tour;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return split(ctx, best_tour);
}

Plan exact_small(const Instance& inst, const DroneTimeEstimator& est) {
  const PlanningContext ctx(inst, est);
  return exact_small(ctx);
}

Plan finalize_plan(const Instance& inst, const Plan& plan, const DronePhysicsParams& params,
                   const FinalizeOptions& options) {
  Plan out = plan;
  out.total_duration = 0.0;
  out.total_dec = 0.0;
  for (std::size_t idx = 0; idx < out.operations.size(); ++idx) {
    Operation& op = out.operations[idx];
    op.trajectory.reset();
    op.energy = 0.0;
    if (!op.drone_node) {
      op.t_o = op.t_truck;
      out.total_duration += op.t_o;
      continue;
    }
    std::vector<Point2> pts;
    std::vector<double> speeds;
    std::vector<int> stops{op.start};
    stops.insert(stops.end(), op.truck_seq.begin(), op.truck_seq.end());
    stops.push_back(op.end);
    double truck_time = 0.0;
    pts.push_back(inst.coord(op.start));
    for (std::size_t s = 0; s + 1 < stops.size(); ++s) {
      const TruckLegPath leg = truck_leg_path(inst, stops[s], stops[s + 1]);
      truck_time += leg.time;
      for (std::size_t w = 1; w < leg.waypoints.size(); ++w) {
        if (leg.waypoints[w] == pts.back()) continue;
        pts.push_back(leg.waypoints[w]);
        speeds.push_back(leg.speeds[w - 1]);
      }
    }
    const TimedTruckPath truck = pts.size() < 2 ? TimedTruckPath::parked(pts.front(), params.dt_minor)
                                                : TimedTruckPath(pts, speeds, params.dt_minor);
    FlightSpec spec;
    const Point2 s = inst.coord(op.start);
    const Point2 d = inst.coord(*op.drone_node);
    spec.start = {s.x, s.y, params.truck_bed_alt};
    spec.delivery = {d.x, d.y, 0.0};
    spec.end = truck;
    spec.ras = inst.ras;
    RendezvousOptions ro;
    ro.energy_tiebreak = options.energy_tiebreak;
    ro.truck_time = truck_time;
    Trajectory traj;
    try {
      traj = plan_coordinated_flight(spec, params, ro);
    } catch (const Error& e) {
      throw NoRendezvous("operation " + std::to_string(idx) + ": " + e.what());
    }
    op.t_truck = truck_time;
    op.t_o = std::max(truck_time, traj.duration);
    op.energy = traj.total_energy;
    if (options.keep_trajectories) op.trajectory = std::move(traj);
    out.total_duration += op.t_o;
    out.total_dec += op.energy;
  }
  out.verified = true;
  return out;
}

}  // namespace dronetour
