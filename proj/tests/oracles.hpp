#pragma once

// Reference implementations shared by the planner, harness and acceptance
// tests. Each one is a direct enumeration with no pruning.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "dronetour/planner.hpp"

namespace oracle {

// Every path through the operation graph of the tour. Truck stretches are
// single legs and an operation's truck time is summed left to right, so the
// arithmetic matches any planner that accumulates the same way.
inline double best_partition(const dronetour::PlanningContext& ctx, const std::vector<int>& tour) {
  const int m = static_cast<int>(tour.size()) - 1;
  auto at = [&](int p) { return tour[static_cast<std::size_t>(p)]; };
  double best = std::numeric_limits<double>::infinity();
  auto walk = [&](auto&& self, int p, double acc) -> void {
    if (p == m) {
      best = std::min(best, acc);
      return;
    }
    self(self, p + 1, acc + ctx.truck(at(p), at(p + 1)));
    for (int k = p + 1; k < m; ++k) {
      for (int j = k + 1; j <= m; ++j) {
        double tt = 0.0;
        for (int q = p; q < k - 1; ++q) tt += ctx.truck(at(q), at(q + 1));
        tt += ctx.truck(at(k - 1), at(k + 1));
        for (int q = k + 1; q < j; ++q) tt += ctx.truck(at(q), at(q + 1));
        const double e = ctx.drone(at(p), at(k), at(j));
        self(self, j, acc + std::max(tt, e));
      }
    }
  };
  walk(walk, 0, 0.0);
  return best;
}

// Structural plan checks: chaining, depot ends, every delivery exactly once,
// operation time rules.
inline bool plan_is_consistent(const dronetour::Plan& plan, int n, double tol = 1e-9) {
  if (plan.operations.empty()) return false;
  if (plan.operations.front().start != 0 || plan.operations.back().end != 0) return false;
  std::multiset<int> served;
  double total = 0.0;
  for (std::size_t i = 0; i < plan.operations.size(); ++i) {
    const auto& op = plan.operations[i];
    if (i + 1 < plan.operations.size() && op.end != plan.operations[i + 1].start) return false;
    if (op.end != 0) served.insert(op.end);
    for (int v : op.truck_seq) served.insert(v);
    if (op.drone_node) {
      served.insert(*op.drone_node);
      if (std::count(op.truck_seq.begin(), op.truck_seq.end(), *op.drone_node) != 0) return false;
      if (op.t_o < std::max(op.t_truck, op.t_drone_est) - tol) return false;
    } else if (std::abs(op.t_o - op.t_truck) > tol * std::max(1.0, op.t_truck)) {
      return false;
    }
    total += op.t_o;
  }
  if (static_cast<int>(served.size()) != n) return false;
  for (int v = 1; v <= n; ++v) {
    if (served.count(v) != 1) return false;
  }
  return std::abs(total - plan.total_duration) <= 1e-9 * std::max(1.0, total);
}

}  // namespace oracle
