#pragma once

// Random instances for the topology engine, shared by the unit tests and
// the acceptance run.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "aitl/topology.hpp"

namespace aitl::testing {

/// A c-Lipschitz walk of the given length.
inline std::vector<std::int64_t> RandomWalk(std::mt19937_64& rng,
                                            std::size_t length,
                                            std::int64_t c) {
  std::uniform_int_distribution<std::int64_t> step(-c, c);
  std::vector<std::int64_t> f(length);
  f[0] = std::uniform_int_distribution<std::int64_t>(-50, 50)(rng);
  for (std::size_t i = 1; i < length; ++i) f[i] = f[i - 1] + step(rng);
  return f;
}

/// A c-Lipschitz map: a scaled signed permutation of the grid (so the
/// boundary winds +1 or -1 around its interior) plus noise. The scale s and
/// noise amplitude k satisfy s + k = c.
inline GridMap RandomLipschitzMap(std::mt19937_64& rng, int n,
                                  std::int64_t c) {
  const std::int64_t k =
      std::uniform_int_distribution<std::int64_t>(0, c - 1)(rng);
  const std::int64_t s = c - k;
  const bool swap = rng() & 1;
  const std::int64_t sx = (rng() & 1) ? 1 : -1;
  const std::int64_t sy = (rng() & 1) ? 1 : -1;
  std::uniform_int_distribution<std::int64_t> noise(0, k);
  GridMap g(n, n, c);
  for (int v = 0; v <= n; ++v) {
    for (int u = 0; u <= n; ++u) {
      const std::int64_t a = swap ? v : u;
      const std::int64_t b = swap ? u : v;
      g.at(u, v) = {sx * s * a + noise(rng), sy * s * b + noise(rng)};
    }
  }
  return g;
}

/// Smallest image distance to the target over the boundary nodes.
inline std::int64_t BoundaryClearance(const GridMap& g, const Point& t) {
  std::int64_t best = -1;
  for (const Node& n : BoundaryNodes(g.bounds())) {
    const std::int64_t d = SupDistance(g.at(n), t);
    if (best < 0 || d < best) best = d;
  }
  return best;
}

/// Smallest image distance to the target over every node.
inline std::int64_t ScanDistance(const GridMap& g, const Point& t) {
  std::int64_t best = -1;
  for (const Point& p : g.image()) {
    const std::int64_t d = SupDistance(p, t);
    if (best < 0 || d < best) best = d;
  }
  return best;
}

/// A random target inside the image's bounding box that satisfies the
/// preconditions of FindPreimage, if one turns up in `tries` draws.
inline std::optional<Point> AdmissibleTarget(std::mt19937_64& rng,
                                             const GridMap& g, int tries) {
  std::int64_t x0 = g.image()[0].x, x1 = x0, y0 = g.image()[0].y, y1 = y0;
  for (const Point& p : g.image()) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  std::uniform_int_distribution<std::int64_t> dx(x0, x1), dy(y0, y1);
  for (int i = 0; i < tries; ++i) {
    const Point t{dx(rng), dy(rng)};
    if (BoundaryClearance(g, t) <= g.step_bound()) continue;
    if (WindingNumber(BoundaryPath(g), t) == 0) continue;
    return t;
  }
  return std::nullopt;
}

}  // namespace aitl::testing
