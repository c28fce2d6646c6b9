#include "dronetour/geometry.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "dronetour/error.hpp"

namespace dronetour {

namespace {

constexpr double kWorldHalfSize = 1e8;
constexpr double kInf = std::numeric_limits<double>::infinity();

double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }

// Keeps the part of a convex polygon with a*x + b*y <= c.
std::vector<Point2> clip(const std::vector<Point2>& poly, double a, double b, double c) {
  std::vector<Point2> out;
  const std::size_t n = poly.size();
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    const double fp = a * p.x + b * p.y - c;
    const double fq = a * q.x + b * q.y - c;
    if (fp <= 0) out.push_back(p);
    if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
      const double t = fp / (fp - fq);
      out.push_back(p + (q - p) * t);
    }
  }
  // Drop near-duplicate vertices produced by clipping through a vertex.
  std::vector<Point2> dedup;
  for (const auto& p : out) {
    if (dedup.empty() || distance(dedup.back(), p) > 1e-9) dedup.push_back(p);
  }
  if (dedup.size() > 1 && distance(dedup.front(), dedup.back()) <= 1e-9) dedup.pop_back();
  return dedup;
}

}  // namespace

double l2_approx_2d(double vx, double vy, const NormConstants& k) {
  const double ax = std::abs(vx);
  const double ay = std::abs(vy);
  return k.lambda2 * (ax + ay) + (1.0 - k.lambda2) * std::max(ax, ay);
}

double l2_approx_2d(const Point2& v, const NormConstants& k) { return l2_approx_2d(v.x, v.y, k); }

double l2_approx_3d(double x, double y, double z, const NormConstants& k) {
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  const double az = std::abs(z);
  return k.lambda3 * (ax + ay + az) + (1.0 - k.lambda3) * std::max({ax, ay, az});
}

double l2_approx_3d(const Point3& v, const NormConstants& k) { return l2_approx_3d(v.x, v.y, v.z, k); }

double ConvexPolygon::area() const {
  double s = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    s += cross(vertices[i], vertices[(i + 1) % vertices.size()]);
  }
  return 0.5 * s;
}

Point2 ConvexPolygon::centroid() const {
  Point2 c;
  for (const auto& v : vertices) c = c + v;
  return vertices.empty() ? c : c * (1.0 / static_cast<double>(vertices.size()));
}

bool ConvexPolygon::contains_strictly(const Point2& p, double tol) const {
  if (empty()) return false;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Point2& a = vertices[i];
    const Point2& b = vertices[(i + 1) % vertices.size()];
    const Point2 e = b - a;
    if (cross(e, p - a) / e.norm() <= tol) return false;
  }
  return true;
}

double ConvexPolygon::distance_to(const Point2& p) const {
  if (empty()) return kInf;
  if (contains_strictly(p, 0.0)) return 0.0;
  double best = kInf;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Point2& a = vertices[i];
    const Point2& b = vertices[(i + 1) % vertices.size()];
    const Point2 e = b - a;
    const double t = std::clamp((p - a).dot(e) / e.dot(e), 0.0, 1.0);
    best = std::min(best, distance(p, a + e * t));
  }
  return best;
}

Ras::Ras(std::string id, std::vector<Halfspace> halfspaces)
    : id_(std::move(id)), halfspaces_(std::move(halfspaces)) {
  if (halfspaces_.empty()) throw InvalidArgument("RAS '" + id_ + "' has no halfspaces");
  for (const auto& h : halfspaces_) {
    const double n = std::hypot(h.normal[0], h.normal[1], h.normal[2]);
    if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(h.rhs)) {
      throw InvalidArgument("RAS '" + id_ + "' has a degenerate halfspace");
    }
  }
  for (double z : {0.0, 1000.0}) {
    const ConvexPolygon fp = footprint(z);
    for (const auto& v : fp.vertices) {
      if (std::abs(v.x) >= 0.5 * kWorldHalfSize || std::abs(v.y) >= 0.5 * kWorldHalfSize) {
        throw InvalidArgument("RAS '" + id_ + "' has an unbounded footprint");
      }
    }
  }
}

Ras Ras::box(std::string id, double x0, double y0, double x1, double y1, std::optional<double> top) {
  if (!(x1 > x0) || !(y1 > y0)) throw InvalidArgument("RAS box needs positive extent");
  std::vector<Halfspace> hs = {
      {{-1.0, 0.0, 0.0}, -x0},
      {{1.0, 0.0, 0.0}, x1},
      {{0.0, -1.0, 0.0}, -y0},
      {{0.0, 1.0, 0.0}, y1},
  };
  if (top) hs.push_back({{0.0, 0.0, 1.0}, *top});
  return Ras(std::move(id), std::move(hs));
}

ConvexPolygon Ras::footprint(double z, double clearance) const {
  std::vector<Point2> poly = {{-kWorldHalfSize, -kWorldHalfSize},
                              {kWorldHalfSize, -kWorldHalfSize},
                              {kWorldHalfSize, kWorldHalfSize},
                              {-kWorldHalfSize, kWorldHalfSize}};
  for (const auto& h : halfspaces_) {
    const double full = std::hypot(h.normal[0], h.normal[1], h.normal[2]);
    const double a = h.normal[0];
    const double b = h.normal[1];
    const double c = h.rhs - h.normal[2] * z + clearance * full;
    if (std::hypot(a, b) < 1e-12) {
      if (c > 0.0) continue;
      return {};
    }
    poly = clip(poly, a, b, c);
    if (poly.size() < 3) return {};
  }
  return {std::move(poly)};
}

bool point_in_ras(const Point3& p, const Ras& ras, double margin) {
  for (const auto& h : ras.halfspaces()) {
    const double n = std::hypot(h.normal[0], h.normal[1], h.normal[2]);
    if ((h.evaluate(p) - h.rhs) / n >= margin) return false;
  }
  return true;
}

double Polyline::length() const {
  double s = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) s += distance(points[i - 1], points[i]);
  return s;
}

bool segment_blocked(const Point2& p, const Point2& q, const ConvexPolygon& poly, double tol) {
  if (poly.empty()) return false;
  double tmin = 0.0;
  double tmax = 1.0;
  const Point2 d = q - p;
  for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
    const Point2& a = poly.vertices[i];
    const Point2& b = poly.vertices[(i + 1) % poly.vertices.size()];
    const Point2 e = b - a;
    const double len = e.norm();
    // Outward unit normal of a counter-clockwise edge.
    const Point2 n{e.y / len, -e.x / len};
    const double f0 = n.dot(p - a);
    const double den = n.dot(d);
    const double num = -tol - f0;
    if (std::abs(den) < 1e-15) {
      if (num <= 0.0) return false;
      continue;
    }
    const double t = num / den;
    if (den > 0) {
      tmax = std::min(tmax, t);
    } else {
      tmin = std::max(tmin, t);
    }
    if (tmin >= tmax) return false;
  }
  return tmax - tmin > 1e-12;
}

AvoidanceMap::AvoidanceMap(std::span<const Ras> ras_list, double clearance, double z) {
  for (const auto& r : ras_list) {
    ConvexPolygon fp = r.footprint(z, clearance);
    if (!fp.empty()) polys_.push_back(std::move(fp));
  }
  for (std::size_t i = 0; i < polys_.size(); ++i) {
    for (const auto& v : polys_[i].vertices) {
      bool inside_other = false;
      for (std::size_t j = 0; j < polys_.size() && !inside_other; ++j) {
        if (j != i && polys_[j].contains_strictly(v, 1e-6)) inside_other = true;
      }
      if (!inside_other) corners_.push_back(v);
    }
  }
  const std::size_t m = corners_.size();
  visible_.assign(m * m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const bool vis = this->visible(corners_[i], corners_[j]);
      visible_[i * m + j] = visible_[j * m + i] = vis ? 1 : 0;
    }
  }
}

bool AvoidanceMap::visible(const Point2& p, const Point2& q) const {
  for (const auto& poly : polys_) {
    if (segment_blocked(p, q, poly)) return false;
  }
  return true;
}

bool AvoidanceMap::enclosed(const Point2& p) const {
  for (const auto& poly : polys_) {
    if (poly.contains_strictly(p, 1e-6)) return true;
  }
  return false;
}

Polyline AvoidanceMap::path(const Point2& a, const Point2& b, const EdgeCost& cost) const {
  if (enclosed(a) || enclosed(b)) {
    throw NoPath("endpoint inside a restricted airspace footprint");
  }
  if (visible(a, b)) return {{a, b}};

  const EdgeCost& c = cost ? cost : EdgeCost([](const Point2& p, const Point2& q) { return distance(p, q); });
  // Graph nodes: 0 = a, 1 = b, 2.. = corners.
  const std::size_t m = corners_.size();
  const std::size_t n = m + 2;
  auto node = [&](std::size_t i) -> const Point2& { return i == 0 ? a : (i == 1 ? b : corners_[i - 2]); };
  std::vector<char> vis_a(m), vis_b(m);
  for (std::size_t i = 0; i < m; ++i) {
    vis_a[i] = visible(a, corners_[i]);
    vis_b[i] = visible(b, corners_[i]);
  }
  auto adjacent = [&](std::size_t i, std::size_t j) -> bool {
    if (i == j) return false;
    if (i > j) std::swap(i, j);
    if (i == 0 && j == 1) return false;  // already known blocked
    if (i == 0) return vis_a[j - 2];
    if (i == 1) return vis_b[j - 2];
    return visible_[(i - 2) * m + (j - 2)];
  };

  std::vector<double> dist(n, kInf);
  std::vector<std::size_t> prev(n, n);
  std::vector<char> done(n, 0);
  dist[0] = 0.0;
  for (;;) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && dist[i] < kInf && (u == n || dist[i] < dist[u])) u = i;
    }
    if (u == n || u == 1) break;
    done[u] = 1;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v] || !adjacent(u, v)) continue;
      const double nd = dist[u] + c(node(u), node(v));
      if (nd < dist[v]) {
        dist[v] = nd;
        prev[v] = u;
      }
    }
  }
  if (!(dist[1] < kInf)) throw NoPath("no obstacle-free route between endpoints");
  Polyline out;
  for (std::size_t v = 1; v != n; v = prev[v]) {
    out.points.push_back(node(v));
    if (v == 0) break;
  }
  std::reverse(out.points.begin(), out.points.end());
  return out;
}

Polyline avoidance_path_2d(const Point2& a, const Point2& b, std::span<const Ras> ras_list,
                           double clearance, double z, const EdgeCost& cost) {
  return AvoidanceMap(ras_list, clearance, z).path(a, b, cost);
}

RoadGraph::RoadGraph(std::vector<Point2> nodes, std::vector<RoadEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  out_.resize(nodes_.size());
  in_.resize(nodes_.size());
  const int n = static_cast<int>(nodes_.size());
  for (const auto& e : edges_) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      throw InvalidArgument("road edge endpoint out of range");
    }
    if (!(e.length >= 0.0) || !(e.speed > 0.0)) {
      throw InvalidArgument("road edge needs nonnegative length and positive speed");
    }
    const double t = e.length / e.speed;
    out_[static_cast<std::size_t>(e.from)].push_back({e.to, t});
    in_[static_cast<std::size_t>(e.to)].push_back({e.from, t});
    if (!e.oneway) {
      out_[static_cast<std::size_t>(e.to)].push_back({e.from, t});
      in_[static_cast<std::size_t>(e.from)].push_back({e.to, t});
    }
  }
}

int RoadGraph::nearest_node(const Point2& p) const {
  int best = -1;
  double bd = kInf;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double d = distance(p, nodes_[i]);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

namespace {

std::vector<double> dijkstra(const RoadGraph& g, int source, bool reverse) {
  std::vector<double> dist(g.size(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(source)] = 0.0;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& arc : reverse ? g.in(u) : g.out(u)) {
      const double nd = d + arc.time;
      if (nd < dist[static_cast<std::size_t>(arc.to)]) {
        dist[static_cast<std::size_t>(arc.to)] = nd;
        pq.push({nd, arc.to});
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<double> truck_times_from(const RoadGraph& g, int source) {
  if (source < 0 || static_cast<std::size_t>(source) >= g.size()) {
    throw InvalidArgument("road node out of range");
  }
  return dijkstra(g, source, false);
}

TruckRoute shortest_truck_path(const RoadGraph& g, int a, int b) {
  const auto n = static_cast<int>(g.size());
  if (a < 0 || a >= n || b < 0 || b >= n) throw InvalidArgument("road node out of range");
  if (a == b) return {0.0, {a}};
  const auto from_a = dijkstra(g, a, false);
  const double total = from_a[static_cast<std::size_t>(b)];
  if (!(total < kInf)) throw NoPath("road graph disconnected between endpoints");
  const auto to_b = dijkstra(g, b, true);
  const double tol = 1e-9 * std::max(1.0, total);

  // Walk tight arcs choosing the smallest next node; every tight arc with
  // from_a[v] + to_b[v] == total stays on some shortest route.
  TruckRoute route{total, {a}};
  int u = a;
  double elapsed = 0.0;
  while (u != b) {
    int next = -1;
    double next_elapsed = 0.0;
    for (const auto& arc : g.out(u)) {
      const double e = elapsed + arc.time;
      if (std::abs(e + to_b[static_cast<std::size_t>(arc.to)] - total) <= tol &&
          std::abs(from_a[static_cast<std::size_t>(arc.to)] - e) <= tol) {
        if (next < 0 || arc.to < next) {
          next = arc.to;
          next_elapsed = e;
        }
      }
    }
    if (next < 0) throw NoPath("route reconstruction failed");
    // Zero-time cycles cannot trap the walk: a revisit would need a tight
    // zero-length loop, which we refuse.
    if (std::find(route.nodes.begin(), route.nodes.end(), next) != route.nodes.end()) {
      throw NoPath("zero-time cycle in road graph");
    }
    route.nodes.push_back(next);
    u = next;
    elapsed = next_elapsed;
  }
  return route;
}

}  // namespace dronetour
