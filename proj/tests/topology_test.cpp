#include <cmath>
#include <numbers>
#include <random>

#include "aitl/topology.hpp"
#include "gtest/gtest.h"
#include "random_maps.hpp"

namespace aitl {
namespace {

using testing::AdmissibleTarget;
using testing::RandomLipschitzMap;
using testing::RandomWalk;
using testing::ScanDistance;

template <typename Fn>
TopologyErrc ErrorOf(Fn fn) {
  try {
    fn();
  } catch (const TopologyError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no TopologyError thrown";
  return TopologyErrc::kBadInput;
}

GridMap Identity(int n, std::int64_t c = 1) {
  GridMap g(n, n, c);
  for (int v = 0; v <= n; ++v) {
    for (int u = 0; u <= n; ++u) g.at(u, v) = {u, v};
  }
  return g;
}

TEST(DiscreteIvt, Examples) {
  const std::vector<std::int64_t> a = {0, 1, 2, 3, 4, 5};
  EXPECT_EQ(DiscreteIvt(a, 1, 3), 3U);
  const std::vector<std::int64_t> b = {0, 2, 4, 6};
  EXPECT_EQ(DiscreteIvt(b, 2, 3), 1U);
  const std::vector<std::int64_t> down = {9, 7, 5, 3};
  EXPECT_EQ(DiscreteIvt(down, 2, 4), 2U);
}

TEST(DiscreteIvt, Errors) {
  const std::vector<std::int64_t> jump = {0, 1, 5};
  EXPECT_EQ(ErrorOf([&] { DiscreteIvt(jump, 2, 1); }),
            TopologyErrc::kNotLipschitz);
  const std::vector<std::int64_t> f = {0, 1, 2};
  EXPECT_EQ(ErrorOf([&] { DiscreteIvt(f, 1, 3); }),
            TopologyErrc::kNotBracketed);
  EXPECT_EQ(ErrorOf([&] { DiscreteIvt(f, 1, -1); }),
            TopologyErrc::kNotBracketed);
  EXPECT_EQ(ErrorOf([&] { DiscreteIvt({}, 1, 0); }), TopologyErrc::kBadInput);
}

TEST(DiscreteIvt, MatchesFullScan) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t c = std::array<std::int64_t, 3>{1, 2, 4}[rng() % 3];
    const auto f = RandomWalk(rng, 1 + rng() % 100, c);
    const auto [lo, hi] = std::minmax(f.front(), f.back());
    for (std::int64_t t = lo; t <= hi; ++t) {
      std::size_t scan = 0;
      while (std::abs(f[scan] - t) >= c) ++scan;
      ASSERT_EQ(DiscreteIvt(f, c, t), scan);
    }
  }
}

TEST(Winding, Examples) {
  LatticePath square{{{2, 0}, {0, 2}, {-2, 0}, {0, -2}}, 1};
  EXPECT_EQ(WindingNumber(square, {0, 0}), 1);
  LatticePath reversed{{{0, -2}, {-2, 0}, {0, 2}, {2, 0}}, 1};
  EXPECT_EQ(WindingNumber(reversed, {0, 0}), -1);
  EXPECT_EQ(WindingNumber(square, {10, 10}), 0);
  LatticePath twice{{{2, 0}, {0, 2}, {-2, 0}, {0, -2},
                     {2, 0}, {0, 2}, {-2, 0}, {0, -2}},
                    1};
  EXPECT_EQ(WindingNumber(twice, {0, 0}), 2);
  EXPECT_EQ(ErrorOf([&] { WindingNumber(square, {1, 0}); }),
            TopologyErrc::kTooClose);
}

// Floating point angle sums as an independent check.
int AngleWinding(const std::vector<Point>& pts, const Point& t) {
  double total = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point& a = pts[i];
    const Point& b = pts[(i + 1) % pts.size()];
    const double aa = std::atan2(double(a.y - t.y), double(a.x - t.x));
    const double ab = std::atan2(double(b.y - t.y), double(b.x - t.x));
    double d = ab - aa;
    while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
    total += d;
  }
  return static_cast<int>(std::lround(total / (2 * std::numbers::pi)));
}

TEST(Winding, AgreesWithAngleSum) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> step(-3, 3);
  for (int i = 0; i < 3000; ++i) {
    std::vector<Point> pts{{10, 0}};
    for (int k = 0; k < 40; ++k) {
      pts.push_back({pts.back().x + step(rng), pts.back().y + step(rng)});
    }
    const Point t{step(rng), step(rng)};
    bool clear = true;
    for (const Point& p : pts) clear = clear && SupDistance(p, t) > 3;
    if (!clear || SupDistance(pts.back(), pts.front()) > 3) continue;
    EXPECT_EQ(WindingNumber({pts, 3}, t), AngleWinding(pts, t));
  }
}

TEST(CertifyLipschitz, Examples) {
  GridMap g = Identity(4);
  EXPECT_FALSE(CertifyLipschitz(g));
  EXPECT_EQ(MaxStep(g), 1);
  g.at(2, 3) = {7, 3};
  const auto bad = CertifyLipschitz(g);
  ASSERT_TRUE(bad);
  // Row 2's upward edge is scanned before row 3.
  EXPECT_EQ(bad->a, (Node{2, 2}));
  EXPECT_EQ(bad->b, (Node{2, 3}));
  EXPECT_EQ(bad->distance, 5);
}

TEST(BoundaryPath, Examples) {
  const LatticePath p = BoundaryPath(Identity(2));
  const std::vector<Point> ccw = {{0, 0}, {1, 0}, {2, 0}, {2, 1},
                                  {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  EXPECT_EQ(p.points, ccw);
  GridMap flat(3, 2, 1);
  for (const Point& q : BoundaryPath(flat).points) EXPECT_EQ(q, (Point{0, 0}));
  EXPECT_EQ(BoundaryPath(flat).points.size(), 10U);
}

TEST(BoundaryPath, StepsStayWithinMapBound) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const GridMap g = RandomLipschitzMap(rng, 1 + rng() % 12, 1 + rng() % 4);
    const auto& pts = BoundaryPath(g).points;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      ASSERT_LE(SupDistance(pts[k], pts[(k + 1) % pts.size()]), g.step_bound());
    }
  }
}

TEST(FindPreimage, Examples) {
  const PreimageCertificate c = FindPreimage(Identity(16), {7, 7});
  EXPECT_EQ(c.node, (Node{7, 7}));
  EXPECT_EQ(c.distance, 0);
  ASSERT_FALSE(c.trace.empty());
  EXPECT_EQ(c.trace.front().rect, (Rect{0, 0, 16, 16}));
  for (const SubdivisionStep& s : c.trace) EXPECT_NE(s.winding, 0);

  GridMap flat(16, 16, 1);
  EXPECT_EQ(ErrorOf([&] { FindPreimage(flat, {5, 5}); }),
            TopologyErrc::kZeroWinding);
  EXPECT_EQ(ErrorOf([&] { FindPreimage(Identity(16), {0, 5}); }),
            TopologyErrc::kBoundaryTooClose);
  GridMap jump = Identity(16);
  jump.at(3, 3) = {40, 3};
  EXPECT_EQ(ErrorOf([&] { FindPreimage(jump, {8, 8}); }),
            TopologyErrc::kNotLipschitz);
}

// Soundness against direct evaluation, completeness against a full scan.
TEST(FindPreimage, AgreesWithExhaustiveScan) {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const int n = 2 + static_cast<int>(rng() % 19);
    const GridMap g = RandomLipschitzMap(rng, n, 1 + rng() % 4);
    const auto t = AdmissibleTarget(rng, g, 20);
    if (!t) continue;
    const std::int64_t c = g.step_bound();
    const PreimageCertificate cert = FindPreimage(g, *t);
    ASSERT_EQ(cert.distance, SupDistance(g.at(cert.node), *t));
    ASSERT_LE(cert.distance, 2 * c);
    ASSERT_LE(ScanDistance(g, *t), 2 * c);
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

// winding(parent) = winding(low half) + winding(high half) whenever the
// dividing section stays clear of the target.
TEST(FindPreimage, WindingIsAdditive) {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const int n = 4 + static_cast<int>(rng() % 12);
    const GridMap g = RandomLipschitzMap(rng, n, 1 + rng() % 3);
    const auto t = AdmissibleTarget(rng, g, 20);
    if (!t) continue;
    const int cut = 1 + static_cast<int>(rng() % (n - 1));
    const bool along_u = rng() & 1;
    const Rect lo = along_u ? Rect{0, 0, cut, n} : Rect{0, 0, n, cut};
    const Rect hi = along_u ? Rect{cut, 0, n, n} : Rect{0, cut, n, n};
    bool clear = true;
    for (int k = 0; k <= n; ++k) {
      const Node s = along_u ? Node{cut, k} : Node{k, cut};
      clear = clear && SupDistance(g.at(s), *t) > g.step_bound();
    }
    if (!clear) continue;
    EXPECT_EQ(WindingNumber(BoundaryPath(g), *t),
              WindingNumber(BoundaryPath(g, lo), *t) +
                  WindingNumber(BoundaryPath(g, hi), *t));
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Trajectory, Examples) {
  const std::vector<Point> ideal = {{0, 0}, {8, 0}, {8, 8}, {0, 8}};
  const TrajectoryReport same = TrajectoryMatch({ideal, 8}, ideal, 0);
  EXPECT_EQ(same.max_deviation, (Fraction{0, 1}));
  EXPECT_TRUE(same.ok);
  EXPECT_TRUE(same.monotone);

  std::vector<Point> shifted;
  for (const Point& p : ideal) shifted.push_back({p.x + 1, p.y + 1});
  const TrajectoryReport r = TrajectoryMatch({shifted, 8}, ideal, 1);
  EXPECT_EQ(r.max_deviation, (Fraction{1, 1}));
  EXPECT_TRUE(r.ok);
  EXPECT_FALSE(TrajectoryMatch({shifted, 8}, ideal, 0).ok);

  // Visiting the corners out of order is not monotone progress.
  const std::vector<Point> backwards = {{0, 0}, {0, 8}, {8, 8}, {8, 0}};
  EXPECT_FALSE(TrajectoryMatch({backwards, 8}, ideal, 0).monotone);
}

TEST(Trajectory, SegmentDistanceMatchesDenseSampling) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::int64_t> d(-20, 20);
  for (int i = 0; i < 500; ++i) {
    const Point p{d(rng), d(rng)}, a{d(rng), d(rng)}, b{d(rng), d(rng)};
    double best = 1e18;
    for (int k = 0; k <= 20000; ++k) {
      const double s = k / 20000.0;
      const double x = a.x + s * (b.x - a.x), y = a.y + s * (b.y - a.y);
      best = std::min(best, std::max(std::abs(p.x - x), std::abs(p.y - y)));
    }
    const double exact = SegmentDistance(p, a, b).value();
    ASSERT_LE(exact, best + 1e-9);
    ASSERT_GE(exact, best - 0.01);
  }
}

TEST(Json, Shapes) {
  EXPECT_EQ(nlohmann::json(Point{3, -4}).dump(), "[3,-4]");
  EXPECT_EQ(nlohmann::json(Rect{0, 1, 2, 3}).dump(), "[0,1,2,3]");
  const PreimageCertificate c = FindPreimage(Identity(4), {2, 2});
  const nlohmann::json j = c;
  EXPECT_EQ(j.at("node").get<Node>(), c.node);
  EXPECT_EQ(j.at("trace").size(), c.trace.size());
  EXPECT_EQ(nlohmann::json(Point{1, 2}).get<Point>(), (Point{1, 2}));
}

}  // namespace
}  // namespace aitl
