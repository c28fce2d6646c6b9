#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "doctest.h"
#include "dronetour/error.hpp"
#include "dronetour/harness.hpp"
#include "dronetour/planner.hpp"
#include "oracles.hpp"

using namespace dronetour;

namespace {

Instance scatter(int n, std::uint64_t seed, double side = 4000.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  Instance inst;
  inst.depot = {side / 2, side / 2};
  for (int i = 0; i < n; ++i) inst.deliveries.push_back({u(rng), u(rng)});
  return inst;
}

std::vector<int> identity_tour(int n) {
  std::vector<int> t(static_cast<std::size_t>(n + 2), 0);
  std::iota(t.begin() + 1, t.end() - 1, 1);
  return t;
}

std::vector<int> random_tour(int n, std::mt19937_64& rng) {
  auto t = identity_tour(n);
  std::shuffle(t.begin() + 1, t.end() - 1, rng);
  return t;
}

double euclid_tour(const Instance& inst, const std::vector<int>& t) {
  double s = 0.0;
  for (std::size_t p = 0; p + 1 < t.size(); ++p) s += distance(inst.coord(t[p]), inst.coord(t[p + 1]));
  return s;
}

const DroneTimeEstimator kFree =
    DroneTimeEstimator::custom("free", [](const Point2&, const Point2&, const Point2&) { return 0.0; });

}  // namespace

TEST_CASE("truck leg times") {
  Instance inst;
  inst.depot = {0, 0};
  inst.deliveries = {{600, 800}, {0, 1000}};
  CHECK(truck_leg_time(inst, 1, 1) == 0.0);
  CHECK(truck_leg_time(inst, 0, 1) == doctest::Approx(90.0).epsilon(1e-12));

  // Road square: the only way from corner 0 to corner 2 runs through corner 1.
  auto g = std::make_shared<RoadGraph>(std::vector<Point2>{{0, 0}, {1000, 0}, {1000, 1000}},
                                       std::vector<RoadEdge>{{0, 1, 1000.0, 10.0, false}, {1, 2, 1000.0, 10.0, false}});
  Instance road;
  road.mode = TravelMode::kRoad;
  road.road = g;
  road.depot = {0, 0};
  road.deliveries = {{1000, 0}, {1000, 1000}};
  road.anchors = {0, 1, 2};
  road.truck_speed = 10.0;
  road.validate();
  CHECK(truck_leg_time(road, 0, 2) == doctest::Approx(200.0));
  CHECK(truck_leg_time(road, 0, 2) > distance(road.coord(0), road.coord(2)) / 10.0);

  // Airspace between two nodes forces the truck around it.
  Instance walled;
  walled.depot = {0, 0};
  walled.deliveries = {{100, 0}};
  walled.ras = {Ras::box("w", 40, -10, 60, 10)};
  CHECK(truck_leg_time(walled, 0, 1) > 100.0 / walled.truck_speed);
}

TEST_CASE("two-opt on the unit square follows the perimeter") {
  Instance inst;
  inst.truck_speed = 1.0;
  inst.depot = {0, 0};
  inst.deliveries = {{1, 1}, {0, 1}, {1, 0}};
  const auto t = initial_tour_two_opt(inst);
  CHECK(t.front() == 0);
  CHECK(t.back() == 0);
  CHECK(euclid_tour(inst, t) == doctest::Approx(4.0));
  CHECK(t[2] == 1);  // the diagonal corner sits in the middle
}

TEST_CASE("two-opt output is a local optimum no worse than nearest neighbor") {
  for (std::uint64_t s = 1; s <= 40; ++s) {
    const int n = 3 + static_cast<int>(s % 10);
    const Instance inst = scatter(n, s);
    for (std::uint64_t seed : {std::uint64_t{0}, s}) {
      const auto t = initial_tour_two_opt(inst, seed);
      REQUIRE(static_cast<int>(t.size()) == n + 2);
      CHECK(t.front() == 0);
      CHECK(t.back() == 0);
      auto mid = std::vector<int>(t.begin() + 1, t.end() - 1);
      std::sort(mid.begin(), mid.end());
      std::vector<int> want(static_cast<std::size_t>(n));
      std::iota(want.begin(), want.end(), 1);
      CHECK(mid == want);
      CHECK(initial_tour_two_opt(inst, seed) == t);

      // No reversal of an interior segment shortens the tour.
      const double len = euclid_tour(inst, t);
      for (int i = 1; i <= n; ++i) {
        for (int j = i + 1; j <= n; ++j) {
          auto r = t;
          std::reverse(r.begin() + i, r.begin() + j + 1);
          CHECK(euclid_tour(inst, r) >= len - 1e-9 * len);
        }
      }
    }

    // Nearest neighbor from the depot, computed directly.
    std::vector<int> nn{0};
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    for (int step = 0; step < n; ++step) {
      int best = -1;
      for (int v = 1; v <= n; ++v) {
        if (used[static_cast<std::size_t>(v)]) continue;
        if (best < 0 || distance(inst.coord(nn.back()), inst.coord(v)) < distance(inst.coord(nn.back()), inst.coord(best))) best = v;
      }
      used[static_cast<std::size_t>(best)] = true;
      nn.push_back(best);
    }
    nn.push_back(0);
    CHECK(euclid_tour(inst, initial_tour_two_opt(inst)) <= euclid_tour(inst, nn) + 1e-9);
  }
}

TEST_CASE("split with a single delivery picks the faster of truck and drone") {
  Instance inst;
  inst.depot = {0, 0};
  inst.deliveries = {{1000, 0}};
  const std::vector<int> tour{0, 1, 0};
  const double truck = 2000.0 / inst.truck_speed;

  const Plan fast = split(inst, tour, DroneTimeEstimator::custom("c", [](const Point2&, const Point2&, const Point2&) { return 100.0; }));
  REQUIRE(fast.operations.size() == 1);
  CHECK(fast.operations[0].drone_node == 1);
  CHECK(fast.operations[0].start == 0);
  CHECK(fast.operations[0].end == 0);
  CHECK(fast.total_duration == 100.0);

  const Plan slow = split(inst, tour, DroneTimeEstimator::custom("c", [](const Point2&, const Point2&, const Point2&) { return 500.0; }));
  CHECK(slow.drone_count() == 0);
  CHECK(slow.operations.size() == 2);
  CHECK(slow.total_duration == doctest::Approx(truck));
}

TEST_CASE("free drone on three deliveries") {
  // Collinear: the truck skipping a node saves time only when it is a detour.
  Instance inst;
  inst.depot = {0, 0};
  inst.deliveries = {{1000, 500}, {2000, 0}, {3000, 500}};
  const std::vector<int> tour{0, 1, 2, 3, 0};
  const PlanningContext ctx(inst, kFree);
  const Plan p = split(ctx, tour);
  CHECK(p.total_duration == oracle::best_partition(ctx, tour));
  CHECK(p.drone_count() >= 1);
  CHECK(p.total_duration < tour_truck_time(ctx, tour));
  CHECK(oracle::plan_is_consistent(p, 3));
}

TEST_CASE("split matches the exhaustive partition oracle") {
  const DroneTimeEstimator ests[] = {
      DroneTimeEstimator::straight_line(), DroneTimeEstimator::calibrated(kDefaultDroneSpeed, 1.4), kFree,
      DroneTimeEstimator::straight_line(8.0),
      DroneTimeEstimator::custom("wobble", [](const Point2& a, const Point2& b, const Point2& c) {
        return 0.05 * (distance(a, b) + distance(b, c)) + 30.0 * std::sin(a.x + b.y + c.x);
      })};
  std::mt19937_64 rng(11);
  int cases = 0;
  for (std::uint64_t s = 1; s <= 60; ++s) {
    const int n = 1 + static_cast<int>(s % 7);
    const Instance inst = scatter(n, 100 + s);
    for (const auto& e : ests) {
      const PlanningContext ctx(inst, e);
      for (int rep = 0; rep < 2; ++rep) {
        const auto tour = random_tour(n, rng);
        const SplitValue v = split_value(ctx, tour);
        const Plan p = split(ctx, tour);
        CHECK(v.duration == oracle::best_partition(ctx, tour));
        CHECK(p.total_duration == v.duration);
        CHECK(p.drone_count() == v.drones);
        // Truck stops keep the tour order.
        std::vector<int> truck_stops{0}, want;
        for (const auto& op : p.operations) {
          truck_stops.insert(truck_stops.end(), op.truck_seq.begin(), op.truck_seq.end());
          truck_stops.push_back(op.end);
        }
        for (int v : tour) {
          const bool flown = std::any_of(p.operations.begin(), p.operations.end(), [&](const Operation& op) { return op.drone_node == v; });
          if (!flown) want.push_back(v);
        }
        CHECK(truck_stops == want);
        CHECK(oracle::plan_is_consistent(p, n));
        const Plan t = truck_only_plan(ctx, tour);
        CHECK(v.duration <= t.total_duration);
        ++cases;
      }
    }
  }
  CHECK(cases == 600);
}

TEST_CASE("split rejects malformed tours") {
  const Instance inst = scatter(3, 5);
  const PlanningContext ctx(inst, DroneTimeEstimator::straight_line());
  CHECK_THROWS_AS(split(ctx, {0, 1, 2, 0}), InvalidArgument);
  CHECK_THROWS_AS(split(ctx, {0, 1, 1, 3, 0}), InvalidArgument);
  CHECK_THROWS_AS(split(ctx, {1, 0, 2, 3, 0}), InvalidArgument);
}

TEST_CASE("improve is monotone and respects its budget") {
  std::mt19937_64 rng(21);
  for (std::uint64_t s = 1; s <= 12; ++s) {
    const Instance inst = scatter(6, 200 + s);
    const PlanningContext ctx(inst, DroneTimeEstimator::straight_line());
    const auto tour = random_tour(6, rng);
    const double start = split_value(ctx, tour).duration;

    const ImproveResult none = improve(ctx, tour, 0);
    CHECK(none.tour == tour);
    CHECK(none.iterations == 0);
    CHECK(none.plan.total_duration == start);

    const ImproveResult r = improve(ctx, tour);
    CHECK(r.plan.total_duration <= start);
    CHECK(static_cast<int>(r.history.size()) == r.iterations);
    double prev = start;
    for (double h : r.history) {
      CHECK(h <= prev);
      prev = h;
    }
    CHECK(oracle::plan_is_consistent(r.plan, 6));

    // A local optimum is a fixed point.
    const ImproveResult again = improve(ctx, r.tour);
    CHECK(again.tour == r.tour);
    CHECK(again.iterations == 0);
  }
}

TEST_CASE("exhaustive search bounds the local search and random samples") {
  std::mt19937_64 rng(31);
  for (std::uint64_t s = 1; s <= 6; ++s) {
    const int n = 4 + static_cast<int>(s % 2);
    const Instance inst = scatter(n, 300 + s);
    const PlanningContext ctx(inst, DroneTimeEstimator::straight_line());
    const Plan ex = exact_small(ctx);
    CHECK(oracle::plan_is_consistent(ex, n));
    const ImproveResult r = improve(ctx, initial_tour_two_opt(ctx));
    CHECK(ex.total_duration <= r.plan.total_duration * (1 + kTieTolerance));
    if (n == 5) {
      for (int i = 0; i < 1000; ++i) {
        CHECK(ex.total_duration <= split_value(ctx, random_tour(n, rng)).duration * (1 + kTieTolerance));
      }
    }
  }

  const Instance one = scatter(1, 9);
  const PlanningContext c1(one, DroneTimeEstimator::straight_line());
  CHECK(exact_small(c1).total_duration == split(c1, {0, 1, 0}).total_duration);
  CHECK_THROWS_AS(exact_small(scatter(8, 1), DroneTimeEstimator::straight_line()), SizeError);
}

TEST_CASE("a near-instant drone serves a node whenever the truck detours") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const Instance inst = scatter(4, 400 + s);
    const Plan p = exact_small(inst, DroneTimeEstimator::straight_line(1e12));
    CHECK(p.drone_count() >= 1);
  }
}

TEST_CASE("finalizing a truck-only plan keeps its totals") {
  const Instance inst = scatter(4, 17);
  const PlanningContext ctx(inst, DroneTimeEstimator::straight_line());
  const Plan t = truck_only_plan(ctx, initial_tour_two_opt(ctx));
  const Plan f = finalize_plan(inst, t, DronePhysicsParams{});
  CHECK(f.total_duration == doctest::Approx(t.total_duration).epsilon(1e-12));
  CHECK(f.total_dec == 0.0);
  CHECK(f.verified);
}

TEST_CASE("finalizing against an exact estimator reproduces its estimate") {
  const DronePhysicsParams params;
  const auto flight = DroneTimeEstimator::custom("flight", [&](const Point2& a, const Point2& b, const Point2& c) {
    FlightSpec spec;
    spec.start = {a.x, a.y, params.truck_bed_alt};
    spec.delivery = {b.x, b.y, 0.0};
    spec.end = Point3{c.x, c.y, params.truck_bed_alt};
    return plan_drone_only_flight(spec, params).duration;
  });
  Instance inst;
  inst.depot = {0, 0};
  inst.deliveries = {{1000, 0}};
  const Plan p = split(inst, {0, 1, 0}, flight);
  REQUIRE(p.drone_count() == 1);
  const Plan f = finalize_plan(inst, p, params);
  CHECK(std::abs(f.total_duration - p.total_duration) <= params.dt_minor);
  CHECK(f.total_dec > 0.0);
  REQUIRE(f.operations[0].trajectory.has_value());
}

TEST_CASE("the straight-line estimate undershoots the physics") {
  const DronePhysicsParams params;
  Instance inst;
  inst.depot = {0, 0};
  inst.deliveries = {{2000, 0}};
  const Plan p = split(inst, {0, 1, 0}, DroneTimeEstimator::straight_line());
  REQUIRE(p.drone_count() == 1);
  const Plan f = finalize_plan(inst, p, params);
  CHECK(f.total_duration > p.total_duration);
}

TEST_CASE("finalization keeps the operation set") {
  const DronePhysicsParams params;
  ScenarioConfig cfg;
  cfg.n = 8;
  for (int i = 0; i < 3; ++i) {
    const Instance inst = gen_instance(cfg, i, params);
    const PlanningContext ctx(inst, DroneTimeEstimator::straight_line());
    const Plan p = improve(ctx, initial_tour_two_opt(ctx), 20).plan;
    const Plan f = finalize_plan(inst, p, params);
    REQUIRE(f.operations.size() == p.operations.size());
    for (std::size_t k = 0; k < p.operations.size(); ++k) {
      CHECK(f.operations[k].start == p.operations[k].start);
      CHECK(f.operations[k].end == p.operations[k].end);
      CHECK(f.operations[k].truck_seq == p.operations[k].truck_seq);
      CHECK(f.operations[k].drone_node == p.operations[k].drone_node);
      CHECK(f.operations[k].t_o >= f.operations[k].t_truck - 1e-9);
      if (f.operations[k].drone_node) CHECK(f.operations[k].trajectory.has_value());
    }
    CHECK(f.tour() == p.tour());
    CHECK(f.verified);
  }
}
