#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dronetour {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double k) const { return {x * k, y * k}; }
  bool operator==(const Point2&) const = default;

  double dot(const Point2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  bool operator==(const Point3&) const = default;

  Point2 xy() const { return {x, y}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

// Weights of the l1/l-infinity convex combination that stands in for the
// Euclidean norm inside the linear trajectory model.
struct NormConstants {
  double lambda2 = 0.3363788020;
  double lambda3 = 0.2980450507;
};

double l2_approx_2d(double vx, double vy, const NormConstants& k = {});
double l2_approx_2d(const Point2& v, const NormConstants& k = {});
double l2_approx_3d(double x, double y, double z, const NormConstants& k = {});
double l2_approx_3d(const Point3& v, const NormConstants& k = {});

// One face of a restricted airspace. Interior side is normal . r < rhs.
struct Halfspace {
  std::array<double, 3> normal{};
  double rhs = 0.0;

  double evaluate(const Point3& p) const {
    return normal[0] * p.x + normal[1] * p.y + normal[2] * p.z;
  }
};

// Counter-clockwise convex polygon.
struct ConvexPolygon {
  std::vector<Point2> vertices;

  bool empty() const { return vertices.size() < 3; }
  double area() const;
  Point2 centroid() const;
  // Strictly inside by more than tol.
  bool contains_strictly(const Point2& p, double tol = 1e-9) const;
  // Euclidean distance from p to the polygon (0 if inside).
  double distance_to(const Point2& p) const;
};

// Restricted airspace: a convex region given as an intersection of open
// halfspaces. A point is outside as soon as it is on the safe side of one
// face.
class Ras {
 public:
  Ras() = default;
  // Throws InvalidArgument for an empty halfspace list, a zero normal, or a
  // footprint that is unbounded at ground level.
  Ras(std::string id, std::vector<Halfspace> halfspaces);

  // Vertical prism over an axis-aligned rectangle, optionally capped.
  static Ras box(std::string id, double x0, double y0, double x1, double y1,
                 std::optional<double> top = std::nullopt);

  const std::string& id() const { return id_; }
  const std::vector<Halfspace>& halfspaces() const { return halfspaces_; }

  // Horizontal cross-section at altitude z, grown outward by clearance.
  // Empty when the body does not reach altitude z.
  ConvexPolygon footprint(double z, double clearance = 0.0) const;

 private:
  std::string id_;
  std::vector<Halfspace> halfspaces_;
};

// True iff p is within `margin` of the airspace body, measured face by face:
// every face has signed distance (normal . p - rhs)/|normal| < margin.
bool point_in_ras(const Point3& p, const Ras& ras, double margin = 0.0);

struct Polyline {
  std::vector<Point2> points;

  double length() const;
};

using EdgeCost = std::function<double(const Point2&, const Point2&)>;

// Visibility structure over clearance-inflated footprints at one altitude,
// reusable across many endpoint queries.
class AvoidanceMap {
 public:
  AvoidanceMap() = default;
  AvoidanceMap(std::span<const Ras> ras_list, double clearance, double z);

  bool enclosed(const Point2& p) const;
  bool visible(const Point2& p, const Point2& q) const;
  Polyline path(const Point2& a, const Point2& b, const EdgeCost& cost = {}) const;
  const std::vector<ConvexPolygon>& polygons() const { return polys_; }

 private:
  std::vector<ConvexPolygon> polys_;
  std::vector<Point2> corners_;
  std::vector<char> visible_;
};

// Shortest obstacle-free polyline between a and b at altitude z over the
// visibility graph of clearance-inflated footprints. `cost` defaults to
// Euclidean length; any cost that is monotone in segment length and
// subadditive keeps the visibility graph exact. Throws NoPath when a or b is
// enclosed by an inflated footprint or no route exists.
Polyline avoidance_path_2d(const Point2& a, const Point2& b, std::span<const Ras> ras_list,
                           double clearance, double z, const EdgeCost& cost = {});

// True iff the open segment p-q crosses the interior of the polygon.
bool segment_blocked(const Point2& p, const Point2& q, const ConvexPolygon& poly,
                     double tol = 1e-7);

struct RoadEdge {
  int from = 0;
  int to = 0;
  double length = 0.0;  // meters
  double speed = 1.0;   // m/s
  bool oneway = false;
};

class RoadGraph {
 public:
  RoadGraph() = default;
  // Throws InvalidArgument for negative lengths, nonpositive speeds or
  // out-of-range endpoints.
  RoadGraph(std::vector<Point2> nodes, std::vector<RoadEdge> edges);

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<RoadEdge>& edges() const { return edges_; }
  std::size_t size() const { return nodes_.size(); }

  struct Arc {
    int to;
    double time;
  };
  const std::vector<Arc>& out(int node) const { return out_[static_cast<std::size_t>(node)]; }
  const std::vector<Arc>& in(int node) const { return in_[static_cast<std::size_t>(node)]; }

  int nearest_node(const Point2& p) const;

 private:
  std::vector<Point2> nodes_;
  std::vector<RoadEdge> edges_;
  std::vector<std::vector<Arc>> out_;
  std::vector<std::vector<Arc>> in_;
};

struct TruckRoute {
  double time = 0.0;
  std::vector<int> nodes;
};

// Minimum-time route; among equal-time routes the lexicographically smallest
// node sequence. Throws NoPath if b is unreachable.
TruckRoute shortest_truck_path(const RoadGraph& g, int a, int b);

// Single-source minimum travel times (infinity where unreachable).
std::vector<double> truck_times_from(const RoadGraph& g, int source);

}  // namespace dronetour
