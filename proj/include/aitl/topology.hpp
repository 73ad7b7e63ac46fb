#pragma once

// Discrete topology on integer lattices: the intermediate value theorem for
// Lipschitz sequences, winding numbers of bounded-step loops, and preimage
// search for Lipschitz grid maps by winding-guided subdivision. Everything
// is integer-exact.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace aitl {

enum class TopologyErrc {
  kNotLipschitz,
  kNotBracketed,
  kTooClose,
  kZeroWinding,
  kBoundaryTooClose,
  kBadInput,
};

class TopologyError : public std::runtime_error {
 public:
  TopologyError(TopologyErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  TopologyErrc code() const noexcept { return code_; }

 private:
  TopologyErrc code_;
};

struct Point {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

std::int64_t SupDistance(const Point& a, const Point& b);

/// A lattice node (u, v) of a grid map.
struct Node {
  int u = 0;
  int v = 0;
  friend bool operator==(const Node&, const Node&) = default;
};

/// Closed sub-rectangle [u0, u1] x [v0, v1] of a grid.
struct Rect {
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Image points on the nodes 0 <= u <= width, 0 <= v <= height, stored
/// row-major (index v * (width + 1) + u).
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height, std::int64_t step_bound);

  int width() const { return width_; }
  int height() const { return height_; }
  std::int64_t step_bound() const { return step_bound_; }
  void set_step_bound(std::int64_t c) { step_bound_ = c; }

  const Point& at(int u, int v) const { return image_[Index(u, v)]; }
  const Point& at(Node n) const { return at(n.u, n.v); }
  Point& at(int u, int v) { return image_[Index(u, v)]; }
  const std::vector<Point>& image() const { return image_; }

  Rect bounds() const { return {0, 0, width_, height_}; }

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  std::size_t Index(int u, int v) const;

  int width_ = 0;
  int height_ = 0;
  std::int64_t step_bound_ = 0;
  std::vector<Point> image_;
};

/// Closed path: the last point connects back to the first.
struct LatticePath {
  std::vector<Point> points;
  std::int64_t step_bound = 0;
};

/// Least i with |f(i) - t| < c. Throws kNotLipschitz if some step exceeds c
/// and kNotBracketed if t is outside the range of the endpoints.
std::size_t DiscreteIvt(std::span<const std::int64_t> f, std::int64_t c,
                        std::int64_t t);

/// Signed number of counterclockwise turns around `target`. Requires every
/// point to be farther than step_bound from the target (sup-norm); throws
/// kTooClose otherwise.
int WindingNumber(const LatticePath& path, const Point& target);

struct LipschitzViolation {
  Node a;
  Node b;
  std::int64_t distance = 0;
};

/// The first 4-adjacent pair (row-major scan, right neighbour before upper)
/// whose images are farther apart than the map's step bound.
std::optional<LipschitzViolation> CertifyLipschitz(const GridMap& map);
/// The largest image distance between 4-adjacent nodes.
std::int64_t MaxStep(const GridMap& map);

/// Nodes of a rectangle's boundary, counterclockwise from (u0, v0). A
/// degenerate rectangle yields its nodes there and back.
std::vector<Node> BoundaryNodes(const Rect& r);
LatticePath BoundaryPath(const GridMap& map);
LatticePath BoundaryPath(const GridMap& map, const Rect& r);

struct SubdivisionStep {
  Rect rect;
  int winding = 0;
};

struct PreimageCertificate {
  Node node;
  std::int64_t distance = 0;
  std::vector<SubdivisionStep> trace;
};

/// Finds a node whose image is within 2c of the target. The map must be
/// c-Lipschitz, its boundary image must stay farther than c from the
/// target, and the boundary must wind around the target. The node found by
/// subdivision is then moved to a strictly closer 8-neighbour while one
/// exists.
PreimageCertificate FindPreimage(const GridMap& map, const Point& target);

/// An exact nonnegative rational, used for point-to-polyline distances.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / den; }
  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num * b.den == b.num * a.den;
  }
  friend auto operator<=>(const Fraction& a, const Fraction& b) {
    return a.num * b.den <=> b.num * a.den;
  }
};

/// Sup-norm distance from p to the segment [a, b].
Fraction SegmentDistance(const Point& p, const Point& a, const Point& b);

struct TrajectoryReport {
  Fraction max_deviation;
  std::size_t worst_index = 0;
  /// Waypoints whose delta-neighbourhood was reached, greedily in order.
  std::size_t waypoints_reached = 0;
  bool monotone = false;
  bool ok = false;  // max_deviation <= delta
};

/// Compares a closed path with the closed polygon through `ideal`.
TrajectoryReport TrajectoryMatch(const LatticePath& path,
                                 std::span<const Point> ideal,
                                 std::int64_t delta);

void to_json(nlohmann::json& j, const Point& p);
void from_json(const nlohmann::json& j, Point& p);
void to_json(nlohmann::json& j, const Node& n);
void from_json(const nlohmann::json& j, Node& n);
void to_json(nlohmann::json& j, const Rect& r);
void from_json(const nlohmann::json& j, Rect& r);
void to_json(nlohmann::json& j, const LatticePath& p);
void to_json(nlohmann::json& j, const PreimageCertificate& c);
void to_json(nlohmann::json& j, const TrajectoryReport& r);

}  // namespace aitl
