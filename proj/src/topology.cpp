#include "aitl/topology.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

namespace aitl {

namespace {

std::string PointText(const Point& p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

std::string NodeText(const Node& n) {
  return "(" + std::to_string(n.u) + "," + std::to_string(n.v) + ")";
}

// Half-open quadrants around the origin, counterclockwise from +x. The
// origin itself never reaches here.
int Quadrant(std::int64_t x, std::int64_t y) {
  if (x > 0 && y >= 0) return 0;
  if (x <= 0 && y > 0) return 1;
  if (x < 0 && y <= 0) return 2;
  return 3;
}

}  // namespace

std::int64_t SupDistance(const Point& a, const Point& b) {
  return std::max(std::llabs(a.x - b.x), std::llabs(a.y - b.y));
}

GridMap::GridMap(int width, int height, std::int64_t step_bound)
    : width_(width), height_(height), step_bound_(step_bound) {
  if (width < 0 || height < 0) {
    throw TopologyError(TopologyErrc::kBadInput, "negative grid size");
  }
  image_.resize(static_cast<std::size_t>(width + 1) * (height + 1));
}

std::size_t GridMap::Index(int u, int v) const {
  if (u < 0 || u > width_ || v < 0 || v > height_) {
    throw TopologyError(TopologyErrc::kBadInput,
                        "node " + NodeText({u, v}) + " outside grid");
  }
  return static_cast<std::size_t>(v) * (width_ + 1) + u;
}

std::size_t DiscreteIvt(std::span<const std::int64_t> f, std::int64_t c,
                        std::int64_t t) {
  if (f.empty() || c < 1) {
    throw TopologyError(TopologyErrc::kBadInput,
                        "need a nonempty sequence and c >= 1");
  }
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    if (std::llabs(f[i + 1] - f[i]) > c) {
      throw TopologyError(TopologyErrc::kNotLipschitz,
                          "step at index " + std::to_string(i) + " is " +
                              std::to_string(std::llabs(f[i + 1] - f[i])));
    }
  }
  const auto [lo, hi] = std::minmax(f.front(), f.back());
  if (t < lo || t > hi) {
    throw TopologyError(TopologyErrc::kNotBracketed,
                        "threshold " + std::to_string(t) + " outside [" +
                            std::to_string(lo) + ", " + std::to_string(hi) +
                            "]");
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::llabs(f[i] - t) < c) return i;
  }
  // Unreachable for a bracketed Lipschitz sequence.
  throw TopologyError(TopologyErrc::kNotBracketed, "no crossing found");
}

int WindingNumber(const LatticePath& path, const Point& target) {
  if (path.points.empty()) return 0;
  for (const Point& p : path.points) {
    if (SupDistance(p, target) <= path.step_bound) {
      throw TopologyError(TopologyErrc::kTooClose,
                          "path point " + PointText(p) + " within " +
                              std::to_string(path.step_bound) + " of " +
                              PointText(target));
    }
  }
  // Every increment is strictly less than half a turn, so a jump of two
  // quadrants is resolved by the sign of the cross product.
  int quarter_turns = 0;
  const std::size_t n = path.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = path.points[i];
    const Point& b = path.points[(i + 1) % n];
    const std::int64_t ax = a.x - target.x, ay = a.y - target.y;
    const std::int64_t bx = b.x - target.x, by = b.y - target.y;
    const int d = (Quadrant(bx, by) - Quadrant(ax, ay) + 4) % 4;
    if (d == 1) {
      quarter_turns += 1;
    } else if (d == 3) {
      quarter_turns -= 1;
    } else if (d == 2) {
      quarter_turns += ax * by - ay * bx > 0 ? 2 : -2;
    }
  }
  return quarter_turns / 4;
}

std::optional<LipschitzViolation> CertifyLipschitz(const GridMap& map) {
  for (int v = 0; v <= map.height(); ++v) {
    for (int u = 0; u <= map.width(); ++u) {
      if (u < map.width()) {
        const auto d = SupDistance(map.at(u, v), map.at(u + 1, v));
        if (d > map.step_bound()) {
          return LipschitzViolation{{u, v}, {u + 1, v}, d};
        }
      }
      if (v < map.height()) {
        const auto d = SupDistance(map.at(u, v), map.at(u, v + 1));
        if (d > map.step_bound()) {
          return LipschitzViolation{{u, v}, {u, v + 1}, d};
        }
      }
    }
  }
  return std::nullopt;
}

std::int64_t MaxStep(const GridMap& map) {
  std::int64_t best = 0;
  for (int v = 0; v <= map.height(); ++v) {
    for (int u = 0; u <= map.width(); ++u) {
      if (u < map.width()) {
        best = std::max(best, SupDistance(map.at(u, v), map.at(u + 1, v)));
      }
      if (v < map.height()) {
        best = std::max(best, SupDistance(map.at(u, v), map.at(u, v + 1)));
      }
    }
  }
  return best;
}

std::vector<Node> BoundaryNodes(const Rect& r) {
  std::vector<Node> nodes;
  if (r.u0 == r.u1 && r.v0 == r.v1) return {{r.u0, r.v0}};
  if (r.v0 == r.v1) {
    for (int u = r.u0; u <= r.u1; ++u) nodes.push_back({u, r.v0});
    for (int u = r.u1 - 1; u > r.u0; --u) nodes.push_back({u, r.v0});
    return nodes;
  }
  if (r.u0 == r.u1) {
    for (int v = r.v0; v <= r.v1; ++v) nodes.push_back({r.u0, v});
    for (int v = r.v1 - 1; v > r.v0; --v) nodes.push_back({r.u0, v});
    return nodes;
  }
  for (int u = r.u0; u <= r.u1; ++u) nodes.push_back({u, r.v0});
  for (int v = r.v0 + 1; v <= r.v1; ++v) nodes.push_back({r.u1, v});
  for (int u = r.u1 - 1; u >= r.u0; --u) nodes.push_back({u, r.v1});
  for (int v = r.v1 - 1; v > r.v0; --v) nodes.push_back({r.u0, v});
  return nodes;
}

LatticePath BoundaryPath(const GridMap& map, const Rect& r) {
  LatticePath path;
  path.step_bound = map.step_bound();
  for (const Node& n : BoundaryNodes(r)) path.points.push_back(map.at(n));
  return path;
}

LatticePath BoundaryPath(const GridMap& map) {
  return BoundaryPath(map, map.bounds());
}

PreimageCertificate FindPreimage(const GridMap& map, const Point& target) {
  if (auto bad = CertifyLipschitz(map)) {
    throw TopologyError(TopologyErrc::kNotLipschitz,
                        "edge " + NodeText(bad->a) + "-" + NodeText(bad->b) +
                            " has step " + std::to_string(bad->distance));
  }
  const std::int64_t c = map.step_bound();
  for (const Node& n : BoundaryNodes(map.bounds())) {
    if (SupDistance(map.at(n), target) <= c) {
      throw TopologyError(TopologyErrc::kBoundaryTooClose,
                          "boundary node " + NodeText(n) + " maps within " +
                              std::to_string(c) + " of " + PointText(target));
    }
  }

  PreimageCertificate cert;
  Rect r = map.bounds();
  int w = WindingNumber(BoundaryPath(map, r), target);
  if (w == 0) {
    throw TopologyError(TopologyErrc::kZeroWinding,
                        "boundary does not wind around " + PointText(target));
  }
  // Steepest descent over the 8 neighbours. Distances only shrink, so the
  // 2c guarantee of the node the subdivision settled on is kept.
  auto found = [&](Node n) {
    std::int64_t d = SupDistance(map.at(n), target);
    for (bool moved = d > 0; moved;) {
      moved = false;
      Node best = n;
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const Node m{n.u + du, n.v + dv};
          if (m.u < 0 || m.v < 0 || m.u > map.width() || m.v > map.height()) {
            continue;
          }
          const std::int64_t dm = SupDistance(map.at(m), target);
          if (dm < d) {
            d = dm;
            best = m;
            moved = true;
          }
        }
      }
      n = best;
    }
    cert.node = n;
    cert.distance = d;
    return cert;
  };

  while (true) {
    cert.trace.push_back({r, w});
    const int du = r.u1 - r.u0;
    const int dv = r.v1 - r.v0;
    if (du <= 1 && dv <= 1) {
      // The target lies in the convex hull of the cell's images, whose
      // diameter is at most 2c.
      Node best{r.u0, r.v0};
      for (const Node& n : BoundaryNodes(r)) {
        if (SupDistance(map.at(n), target) < SupDistance(map.at(best), target)) {
          best = n;
        }
      }
      return found(best);
    }
    Rect lo = r, hi = r;
    if (du >= dv) {
      const int mid = r.u0 + du / 2;
      for (int v = r.v0; v <= r.v1; ++v) {
        if (SupDistance(map.at(mid, v), target) <= c) return found({mid, v});
      }
      lo.u1 = mid;
      hi.u0 = mid;
    } else {
      const int mid = r.v0 + dv / 2;
      for (int u = r.u0; u <= r.u1; ++u) {
        if (SupDistance(map.at(u, mid), target) <= c) return found({u, mid});
      }
      lo.v1 = mid;
      hi.v0 = mid;
    }
    const int wl = WindingNumber(BoundaryPath(map, lo), target);
    if (wl != 0) {
      r = lo;
      w = wl;
    } else {
      r = hi;
      w = WindingNumber(BoundaryPath(map, hi), target);
    }
  }
}

namespace {

Fraction Reduced(std::int64_t num, std::int64_t den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g > 1 ? Fraction{num / g, den / g} : Fraction{num, den};
}

}  // namespace

Fraction SegmentDistance(const Point& p, const Point& a, const Point& b) {
  const std::int64_t ex = p.x - a.x, ey = p.y - a.y;
  const std::int64_t dx = b.x - a.x, dy = b.y - a.y;
  // max(|ex - t dx|, |ey - t dy|) is convex and piecewise linear in t, so
  // its minimum over [0, 1] sits at an endpoint or a breakpoint.
  std::vector<Fraction> ts = {{0, 1}, {1, 1}};
  auto add = [&](std::int64_t num, std::int64_t den) {
    if (den == 0) return;
    Fraction t = Reduced(num, den);
    if (t.num >= 0 && t.num <= t.den) ts.push_back(t);
  };
  add(ex, dx);
  add(ey, dy);
  add(ex - ey, dx - dy);
  add(ex + ey, dx + dy);
  Fraction best{-1, 1};
  for (const Fraction& t : ts) {
    const std::int64_t vx = std::llabs(ex * t.den - t.num * dx);
    const std::int64_t vy = std::llabs(ey * t.den - t.num * dy);
    const Fraction d = Reduced(std::max(vx, vy), t.den);
    if (best.num < 0 || d < best) best = d;
  }
  return best;
}

TrajectoryReport TrajectoryMatch(const LatticePath& path,
                                 std::span<const Point> ideal,
                                 std::int64_t delta) {
  TrajectoryReport rep;
  if (ideal.empty()) {
    throw TopologyError(TopologyErrc::kBadInput, "empty ideal polyline");
  }
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const Point& p = path.points[i];
    Fraction d{-1, 1};
    for (std::size_t k = 0; k < ideal.size(); ++k) {
      const Fraction s =
          SegmentDistance(p, ideal[k], ideal[(k + 1) % ideal.size()]);
      if (d.num < 0 || s < d) d = s;
    }
    if (i == 0 || d > rep.max_deviation) {
      rep.max_deviation = d;
      rep.worst_index = i;
    }
  }
  std::size_t k = 0;
  for (const Point& p : path.points) {
    while (k < ideal.size() && SupDistance(p, ideal[k]) <= delta) ++k;
  }
  rep.waypoints_reached = k;
  rep.monotone = k == ideal.size();
  rep.ok = rep.max_deviation <= Fraction{delta, 1};
  return rep;
}

void to_json(nlohmann::json& j, const Point& p) { j = {p.x, p.y}; }
void from_json(const nlohmann::json& j, Point& p) {
  p.x = j.at(0).get<std::int64_t>();
  p.y = j.at(1).get<std::int64_t>();
}
void to_json(nlohmann::json& j, const Node& n) { j = {n.u, n.v}; }
void from_json(const nlohmann::json& j, Node& n) {
  n.u = j.at(0).get<int>();
  n.v = j.at(1).get<int>();
}
void to_json(nlohmann::json& j, const Rect& r) { j = {r.u0, r.v0, r.u1, r.v1}; }
void from_json(const nlohmann::json& j, Rect& r) {
  r = {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(),
       j.at(3).get<int>()};
}

void to_json(nlohmann::json& j, const LatticePath& p) {
  j = {{"step_bound", p.step_bound}, {"points", p.points}};
}

void to_json(nlohmann::json& j, const PreimageCertificate& c) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : c.trace) {
    trace.push_back({{"rect", s.rect}, {"winding", s.winding}});
  }
  j = {{"node", c.node}, {"distance", c.distance}, {"trace", trace}};
}

void to_json(nlohmann::json& j, const TrajectoryReport& r) {
  j = {{"max_deviation", {r.max_deviation.num, r.max_deviation.den}},
       {"worst_index", r.worst_index},
       {"waypoints_reached", r.waypoints_reached},
       {"monotone", r.monotone},
       {"ok", r.ok}};
}

}  // namespace aitl
