#include "aitl/constructions.hpp"

#include <algorithm>
#include <exception>
#include <sstream>
#include <thread>

namespace aitl {

namespace {

using nlohmann::json;

// Runs fn(i) for i in [0, n) on `jobs` threads, rethrowing the first error.
template <typename Fn>
void ParallelFor(std::size_t n, unsigned jobs, Fn fn) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += jobs) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

unsigned ExactBits(const ComplexityValue& v, const std::string& what) {
  if (!v.exact()) {
    throw ConstructionError(ConstructionErrc::kOracleCapped,
                            what + " exceeds the oracle cap (" + v.ToText() +
                                ")");
  }
  return v.bits();
}

std::int64_t Ceil(const Fraction& f) { return (f.num + f.den - 1) / f.den; }

// Distance from t to the boundary of [x0, x1] x [y0, y1] when t is inside,
// or -1 when it is outside.
std::int64_t InteriorDepth(const Point& t, std::int64_t x0, std::int64_t y0,
                           std::int64_t x1, std::int64_t y1) {
  if (t.x < x0 || t.x > x1 || t.y < y0 || t.y > y1) return -1;
  return std::min({t.x - x0, x1 - t.x, t.y - y0, y1 - t.y});
}

struct Box {
  std::int64_t x0, y0, x1, y1;
};

Box Bounds(const GridMap& map, const std::vector<Node>& loop) {
  Box b{map.at(loop[0]).x, map.at(loop[0]).y, map.at(loop[0]).x,
        map.at(loop[0]).y};
  for (const Node& n : loop) {
    const Point& p = map.at(n);
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

// Evaluates a grid whose node images come from per-node oracle queries.
template <typename YAt, typename Image>
GridMap EvaluateGrid(int width, int height, std::int64_t c, unsigned jobs,
                     YAt y_at, Image image) {
  GridMap g(width, height, c);
  const std::size_t n = static_cast<std::size_t>(width + 1) * (height + 1);
  std::vector<Point> out(n);
  ParallelFor(n, jobs, [&](std::size_t i) {
    const int u = static_cast<int>(i % (width + 1));
    const int v = static_cast<int>(i / (width + 1));
    out[i] = image(y_at(u, v));
  });
  for (std::size_t i = 0; i < n; ++i) {
    g.at(static_cast<int>(i % (width + 1)), static_cast<int>(i / (width + 1))) =
        out[i];
  }
  return g;
}

void RequireLipschitz(const GridMap& g, const std::string& what) {
  if (auto bad = CertifyLipschitz(g)) {
    throw ConstructionError(
        ConstructionErrc::kNotLipschitz,
        what + ": step " + std::to_string(bad->distance) + " between (" +
            std::to_string(bad->a.u) + "," + std::to_string(bad->a.v) +
            ") and (" + std::to_string(bad->b.u) + "," +
            std::to_string(bad->b.v) + ") exceeds " +
            std::to_string(g.step_bound()));
  }
}

// Sweeps every integer target in the bounding box of the loop's image.
template <typename YAt>
void Sweep(const GridMap& map, const std::vector<Node>& loop, YAt y_at,
           std::vector<TargetResult>& results, SweepSummary& sum) {
  const Box b = Bounds(map, loop);
  for (std::int64_t ty = b.y0; ty <= b.y1; ++ty) {
    for (std::int64_t tx = b.x0; tx <= b.x1; ++tx) {
      ++sum.candidates;
      TargetResult r = SolveTarget(map, loop, {tx, ty});
      if (r.status == "zero_winding" || r.status == "boundary_too_close") {
        continue;
      }
      ++sum.admissible;
      if (r.cert && r.cert->distance <= 2 * map.step_bound()) {
        ++sum.found;
        r.y = y_at(r.cert->node.u, r.cert->node.v);
      } else {
        ++sum.failures;
      }
      results.push_back(std::move(r));
    }
  }
}

json TrajectoryJson(const LatticePath& boundary,
                    const std::vector<Point>& ideal,
                    const TrajectoryReport& t, std::int64_t delta) {
  return {{"boundary", boundary},
          {"ideal", ideal},
          {"delta", delta},
          {"match", t}};
}

json Header(const std::string& experiment, const Calibration& cal) {
  return {{"experiment", experiment},
          {"machine_version", std::string(kMachineVersion)},
          {"depth_cap", cal.params.depth_cap},
          {"fuel", cal.params.fuel},
          {"c_map", cal.c_map}};
}

std::string Text(const BitString& s) { return s.ToText(); }

}  // namespace

json CalibrationToJson(const Calibration& cal) {
  json thm2 = json::array();
  for (const auto& [a, b] : cal.thm2_pairs) thm2.push_back({Text(a), Text(b)});
  json thm3 = json::array();
  for (const auto& [a, b] : cal.thm3_pairs) thm3.push_back({Text(a), Text(b)});
  json xs = json::array();
  for (const auto& x : cal.thm1_x) xs.push_back(Text(x));
  return {{"machine_version", cal.machine_version},
          {"depth_cap", cal.params.depth_cap},
          {"fuel", cal.params.fuel},
          {"audit_len", cal.audit_len},
          {"c_machine", cal.c_machine},
          {"target_side", cal.target_side},
          {"c_map", cal.c_map},
          {"delta_boundary", cal.delta_boundary},
          {"sigma", cal.sigma},
          {"delta_hexagon", cal.delta_hexagon},
          {"z_len", cal.z_len},
          {"thm1_x", xs},
          {"thm2_pairs", thm2},
          {"thm3_pairs", thm3},
          {"rejected", cal.rejected}};
}

Calibration CalibrationFromJson(const json& j) {
  try {
    Calibration cal;
    cal.machine_version = j.at("machine_version").get<std::string>();
    cal.params.depth_cap = j.at("depth_cap").get<unsigned>();
    cal.params.fuel = j.at("fuel").get<unsigned>();
    cal.audit_len = j.at("audit_len").get<std::size_t>();
    cal.c_machine = j.at("c_machine").get<unsigned>();
    cal.target_side = j.at("target_side").get<unsigned>();
    cal.c_map = j.at("c_map").get<std::int64_t>();
    cal.delta_boundary = j.at("delta_boundary").get<std::int64_t>();
    cal.sigma = j.at("sigma").get<std::int64_t>();
    cal.delta_hexagon = j.at("delta_hexagon").get<std::int64_t>();
    cal.z_len = j.at("z_len").get<std::size_t>();
    for (const auto& x : j.at("thm1_x")) {
      cal.thm1_x.push_back(BitString::Parse(x.get<std::string>()));
    }
    for (const auto& p : j.at("thm2_pairs")) {
      cal.thm2_pairs.emplace_back(BitString::Parse(p.at(0).get<std::string>()),
                                  BitString::Parse(p.at(1).get<std::string>()));
    }
    for (const auto& p : j.at("thm3_pairs")) {
      cal.thm3_pairs.emplace_back(BitString::Parse(p.at(0).get<std::string>()),
                                  BitString::Parse(p.at(1).get<std::string>()));
    }
    cal.rejected = j.at("rejected").get<std::vector<std::string>>();
    return cal;
  } catch (const json::exception& e) {
    throw ConstructionError(ConstructionErrc::kBadFixture, e.what());
  } catch (const BitsError& e) {
    throw ConstructionError(ConstructionErrc::kBadFixture, e.what());
  }
}

HalveResult HalveInformation(const Oracle& oracle, const BitString& x,
                             std::int64_t t, std::int64_t c_machine) {
  HalveResult res;
  std::vector<BitString> prefixes;
  for (std::size_t i = 0; i <= x.size(); ++i) prefixes.push_back(x.Prefix(i));
  for (const BitString& y : prefixes) {
    res.profile.push_back(ExactBits(oracle.Complexity(x, y),
                                    "C(" + x.ToText() + "|" + y.ToText() + ")"));
  }
  const auto [lo, hi] = std::minmax(res.profile.front(), res.profile.back());
  res.clamped_target = std::clamp(t, lo, hi);
  res.index = DiscreteIvt(res.profile, c_machine, res.clamped_target);
  res.y = prefixes[res.index];
  res.achieved = static_cast<unsigned>(res.profile[res.index]);
  return res;
}

json TargetResultToJson(const TargetResult& r) {
  json j = {{"target", r.target}, {"status", r.status}, {"winding", r.winding}};
  if (r.cert) {
    j["certificate"] = *r.cert;
    j["image"] = r.image;
    j["y"] = r.y.ToText();
  }
  return j;
}

TargetResult SolveTarget(const GridMap& map, const std::vector<Node>& loop,
                         const Point& target) {
  TargetResult r;
  r.target = target;
  LatticePath path;
  path.step_bound = map.step_bound();
  for (const Node& n : loop) {
    if (SupDistance(map.at(n), target) <= map.step_bound()) {
      r.status = "boundary_too_close";
      return r;
    }
    path.points.push_back(map.at(n));
  }
  r.winding = WindingNumber(path, target);
  if (r.winding == 0) {
    r.status = "zero_winding";
    return r;
  }
  try {
    r.cert = FindPreimage(map, target);
    r.image = map.at(r.cert->node);
    r.status = "found";
  } catch (const TopologyError& e) {
    // The loop encloses the target but the full rectangle boundary does
    // not: possible only when the loop is not the rectangle's boundary.
    switch (e.code()) {
      case TopologyErrc::kZeroWinding:
        r.status = "rect_zero_winding";
        break;
      case TopologyErrc::kBoundaryTooClose:
        r.status = "rect_boundary_too_close";
        break;
      default:
        r.status = "not_lipschitz";
    }
  }
  return r;
}

json SweepToJson(const SweepSummary& s) {
  return {{"candidates", s.candidates},
          {"admissible", s.admissible},
          {"found", s.found},
          {"failures", s.failures},
          {"ideal_interior", s.ideal_interior},
          {"ideal_interior_found", s.ideal_interior_found}};
}

json GridToJson(const GridMap& g) {
  json image = json::array();
  for (const Point& p : g.image()) image.push_back(p);
  return {{"width", g.width()},
          {"height", g.height()},
          {"step_bound", g.step_bound()},
          {"image", image}};
}

std::string ReportCsv(const GridMap& grid, const LatticePath& boundary,
                      const std::vector<Point>& ideal) {
  std::ostringstream os;
  os << "kind,index,u,v,x,y\n";
  for (int v = 0; v <= grid.height(); ++v) {
    for (int u = 0; u <= grid.width(); ++u) {
      const Point& p = grid.at(u, v);
      os << "grid," << v * (grid.width() + 1) + u << ',' << u << ',' << v
         << ',' << p.x << ',' << p.y << '\n';
    }
  }
  for (std::size_t i = 0; i < boundary.points.size(); ++i) {
    os << "boundary," << i << ",,," << boundary.points[i].x << ','
       << boundary.points[i].y << '\n';
  }
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    os << "ideal," << i << ",,," << ideal[i].x << ',' << ideal[i].y << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Theorem 1: y = (p minus u bits, z minus v bits) mapped to
// (C(x|y), C(y|x)).

BitString Thm1Instance::YAt(int u, int v) const {
  return PairEncode(p.DropLast(u), z.DropLast(v));
}

std::vector<Point> Thm1Instance::Ideal() const {
  const std::int64_t cx_ = cx, czx = cz_given_x;
  // Node (0,0) keeps everything: y = (p, z), the ideal image (0, C(z|x)).
  return {{0, czx}, {cx_, czx}, {cx_, 0}, {0, 0}};
}

Thm1Instance Thm1Build(const Oracle& oracle, const BitString& x,
                       std::size_t z_len, const ExperimentOptions& opts) {
  Thm1Instance inst;
  inst.x = x;
  const OracleEntry px = oracle.Lookup(x, {});
  inst.cx = ExactBits(px.value, "C(x)");
  inst.p = px.witness;
  inst.z = oracle.FindIncompressible(z_len, x);
  const ComplexityValue czx = oracle.Complexity(inst.z, x);
  if (!czx.exact()) {
    throw ConstructionError(ConstructionErrc::kNoIncompressibleZ,
                            "C(z|x) for z = " + inst.z.ToText() +
                                " is beyond the cap");
  }
  inst.cz_given_x = czx.bits();
  inst.cz = ExactBits(oracle.Complexity(inst.z), "C(z)");
  inst.cz_given_p = ExactBits(oracle.Complexity(inst.z, inst.p), "C(z|p)");
  inst.cp_given_x = oracle.Complexity(inst.p, x);

  const int w = static_cast<int>(inst.p.size());
  const int h = static_cast<int>(inst.z.size());
  std::vector<BitString> ys;
  for (int v = 0; v <= h; ++v) {
    for (int u = 0; u <= w; ++u) ys.push_back(inst.YAt(u, v));
  }
  const std::vector<ComplexityValue> second = oracle.Complexities(ys, x);
  std::size_t k = 0;
  inst.grid = EvaluateGrid(
      w, h, kMapStepLimit, opts.jobs, [&](int u, int v) { return inst.YAt(u, v); },
      [&](const BitString& y) {
        return Point{ExactBits(oracle.Complexity(x, y), "C(x|y)"), 0};
      });
  for (int v = 0; v <= h; ++v) {
    for (int u = 0; u <= w; ++u) {
      inst.grid.at(u, v).y = ExactBits(second[k++], "C(y|x)");
    }
  }
  inst.measured_step = MaxStep(inst.grid);
  RequireLipschitz(inst.grid, "theorem 1 grid for x = " + x.ToText());
  return inst;
}

std::vector<BitString> Thm1Candidates(const Oracle& oracle, std::size_t count) {
  std::vector<BitString> out;
  const ComplexityTable t = oracle.BuildTable({}, 6);
  for (const auto& [x, e] : t.entries()) {
    if (out.size() >= count) break;
    if (x.size() >= 5 && e.value.exact() && e.value.bits() >= 20) {
      out.push_back(x);
    }
  }
  return out;
}

Thm1Report Thm1Run(const Oracle& oracle, const Thm1Instance& inst,
                   const Calibration& cal, const std::optional<Point>& target) {
  (void)oracle;
  Thm1Report rep;
  rep.instance = inst;
  GridMap& g = rep.instance.grid;
  g.set_step_bound(cal.c_map);
  const std::vector<Node> loop = BoundaryNodes(g.bounds());
  const std::vector<Point> ideal = inst.Ideal();
  rep.trajectory = TrajectoryMatch(BoundaryPath(g), ideal, cal.delta_boundary);
  auto y_at = [&](int u, int v) { return inst.YAt(u, v); };
  Sweep(g, loop, y_at, rep.targets, rep.sweep);

  // Targets the ideal rectangle promises: deep enough inside it that the
  // measured boundary deviation and one grid step cannot reach them.
  const std::int64_t margin = cal.delta_boundary + cal.c_map;
  for (std::int64_t ty = 0; ty <= inst.cz_given_x; ++ty) {
    for (std::int64_t tx = 0; tx <= inst.cx; ++tx) {
      if (InteriorDepth({tx, ty}, 0, 0, inst.cx, inst.cz_given_x) > margin) {
        ++rep.sweep.ideal_interior;
        const TargetResult r = SolveTarget(g, loop, {tx, ty});
        if (r.status == "found") ++rep.sweep.ideal_interior_found;
      }
    }
  }
  bool target_ok = true;
  if (target) {
    TargetResult r = SolveTarget(g, loop, *target);
    if (r.cert) r.y = inst.YAt(r.cert->node.u, r.cert->node.v);
    target_ok = r.status == "found";
    rep.targets.insert(rep.targets.begin(), std::move(r));
  }
  rep.ok = target_ok && rep.trajectory.ok && rep.sweep.failures == 0 &&
           inst.measured_step <= cal.c_map;
  return rep;
}

json Thm1ReportToJson(const Thm1Report& r, const Calibration& cal) {
  const Thm1Instance& in = r.instance;
  json targets = json::array();
  for (const auto& t : r.targets) targets.push_back(TargetResultToJson(t));
  json j = Header("thm1", cal);
  j["instance"] = {
      {"x", Text(in.x)},
      {"p", Text(in.p)},
      {"p_ops", ProgramToText(DecodeProgram(in.p))},
      {"z", Text(in.z)},
      {"z_len", in.z.size()},
      {"C(x)", in.cx},
      {"C(z)", in.cz},
      {"C(z|x)", in.cz_given_x},
      {"C(z|p)", in.cz_given_p},
      {"C(p|x)", in.cp_given_x.ToText()},
      {"spg_ok", in.cp_given_x.exact()},
      {"independence_slack",
       static_cast<int>(in.cz) - static_cast<int>(in.cz_given_p)}};
  j["grid"] = GridToJson(in.grid);
  j["measured_step"] = in.measured_step;
  j["trajectory"] = TrajectoryJson(BoundaryPath(in.grid), in.Ideal(),
                                   r.trajectory, cal.delta_boundary);
  j["delta_boundary_measured"] = Ceil(r.trajectory.max_deviation);
  j["sweep"] = SweepToJson(r.sweep);
  j["targets"] = targets;
  j["ok"] = r.ok;
  return j;
}

// ---------------------------------------------------------------------------
// Theorem 2: y = (p minus u bits, q minus v bits) mapped to
// (C(a|y), C(b|y)), close to the identity.

std::vector<std::pair<BitString, BitString>> Thm2Candidates(
    const Oracle& oracle, std::size_t count) {
  std::vector<BitString> pool;
  const ComplexityTable t = oracle.BuildTable({}, 5);
  for (const auto& [x, e] : t.entries()) {
    if (x.size() == 5 && e.value.exact() && e.value.bits() >= 16) {
      pool.push_back(x);
    }
  }
  std::vector<std::pair<BitString, BitString>> out;
  for (std::size_t i = 0; i < pool.size() && out.size() < count; ++i) {
    for (std::size_t k = i + 1; k < pool.size() && out.size() < count; ++k) {
      const ComplexityValue j = oracle.JointComplexity(pool[i], pool[k]);
      if (!j.exact()) continue;
      const int info = oracle.MutualInfo(pool[i], pool[k]);
      if (info <= 4) out.emplace_back(pool[i], pool[k]);
    }
  }
  return out;
}

Thm2Report Thm2Run(const Oracle& oracle, const BitString& a,
                   const BitString& b, const Calibration& cal,
                   const std::optional<Point>& target,
                   const ExperimentOptions& opts) {
  Thm2Report rep;
  rep.a = a;
  rep.b = b;
  const OracleEntry ea = oracle.Lookup(a, {});
  const OracleEntry eb = oracle.Lookup(b, {});
  rep.ca = ExactBits(ea.value, "C(a)");
  rep.cb = ExactBits(eb.value, "C(b)");
  rep.p = ea.witness;
  rep.q = eb.witness;
  rep.cab = ExactBits(oracle.JointComplexity(a, b), "C(a,b)");
  rep.mutual_info = static_cast<int>(rep.ca + rep.cb) - static_cast<int>(rep.cab);

  const int w = static_cast<int>(rep.p.size());
  const int h = static_cast<int>(rep.q.size());
  auto y_at = [&](int u, int v) {
    return PairEncode(rep.p.DropLast(u), rep.q.DropLast(v));
  };
  rep.grid = EvaluateGrid(w, h, kMapStepLimit, opts.jobs, y_at,
                          [&](const BitString& y) {
                            return Point{
                                ExactBits(oracle.Complexity(a, y), "C(a|y)"),
                                ExactBits(oracle.Complexity(b, y), "C(b|y)")};
                          });
  rep.measured_step = MaxStep(rep.grid);
  RequireLipschitz(rep.grid, "theorem 2 grid for " + a.ToText() + ", " +
                                 b.ToText());
  rep.grid.set_step_bound(cal.c_map);
  for (int v = 0; v <= h; ++v) {
    for (int u = 0; u <= w; ++u) {
      rep.deviation =
          std::max(rep.deviation, SupDistance(rep.grid.at(u, v), {u, v}));
    }
  }
  const std::vector<Node> loop = BoundaryNodes(rep.grid.bounds());
  const std::vector<Point> ideal = {{0, 0}, {w, 0}, {w, h}, {0, h}};
  rep.trajectory = TrajectoryMatch(BoundaryPath(rep.grid), ideal, cal.sigma);
  Sweep(rep.grid, loop, y_at, rep.targets, rep.sweep);

  // The identity maps the rectangle onto itself, so a map within sigma of
  // it winds once around every target deeper than sigma + c_map.
  const std::int64_t margin = cal.sigma + cal.c_map;
  for (std::int64_t ty = 0; ty <= h; ++ty) {
    for (std::int64_t tx = 0; tx <= w; ++tx) {
      if (InteriorDepth({tx, ty}, 0, 0, w, h) > margin) {
        ++rep.sigma_interior;
        const TargetResult r = SolveTarget(rep.grid, loop, {tx, ty});
        if (r.status == "found" && r.cert->distance <= 2 * cal.c_map) {
          ++rep.sigma_interior_found;
        }
      }
    }
  }
  bool target_ok = true;
  if (target) {
    TargetResult r = SolveTarget(rep.grid, loop, *target);
    if (r.cert) r.y = y_at(r.cert->node.u, r.cert->node.v);
    target_ok = r.status == "found";
    rep.targets.insert(rep.targets.begin(), std::move(r));
  }
  rep.ok = target_ok && rep.deviation <= cal.sigma &&
           rep.sigma_interior_found == rep.sigma_interior &&
           rep.sweep.failures == 0 && rep.measured_step <= cal.c_map;
  return rep;
}

json Thm2ReportToJson(const Thm2Report& r, const Calibration& cal) {
  json targets = json::array();
  for (const auto& t : r.targets) targets.push_back(TargetResultToJson(t));
  const std::vector<Point> ideal = {{0, 0},
                                    {r.grid.width(), 0},
                                    {r.grid.width(), r.grid.height()},
                                    {0, r.grid.height()}};
  json j = Header("thm2", cal);
  j["instance"] = {{"a", Text(r.a)},         {"b", Text(r.b)},
                   {"p", Text(r.p)},         {"q", Text(r.q)},
                   {"C(a)", r.ca},           {"C(b)", r.cb},
                   {"C(a,b)", r.cab},        {"I(a:b)", r.mutual_info}};
  j["grid"] = GridToJson(r.grid);
  j["measured_step"] = r.measured_step;
  j["deviation"] = r.deviation;
  j["sigma"] = cal.sigma;
  j["sigma_interior"] = r.sigma_interior;
  j["sigma_interior_found"] = r.sigma_interior_found;
  j["trajectory"] =
      TrajectoryJson(BoundaryPath(r.grid), ideal, r.trajectory, cal.sigma);
  j["sweep"] = SweepToJson(r.sweep);
  j["targets"] = targets;
  j["ok"] = r.ok;
  return j;
}

// ---------------------------------------------------------------------------
// Conditional descriptions a', b' with a calibrated prefix information
// profile, found by exhaustive search.

namespace {

// Strings of length `len` printed from `condition` by programs of at most
// s bits, in lexicographic order, with their complexities.
std::vector<std::pair<BitString, unsigned>> SimpleGiven(
    const Oracle& oracle, const BitString& condition, std::size_t len,
    unsigned s) {
  const SearchHits hits =
      oracle.machine().Search(condition, TargetSpec::AllUpTo(len),
                              std::min<unsigned>(s / kOpcodeBits, oracle.params().depth_cap),
                              oracle.params().fuel);
  std::vector<std::pair<BitString, unsigned>> out;
  for (const auto& [t, hit] : hits) {
    if (t.size() == len) {
      out.emplace_back(t, static_cast<unsigned>(hit.depth * kOpcodeBits));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// I(u : v) from complexities, or nullopt when one is beyond the cap.
std::optional<int> Info(const ComplexityValue& cu, const ComplexityValue& cv,
                        const ComplexityValue& cuv) {
  if (!cu.exact() || !cv.exact() || !cuv.exact()) return std::nullopt;
  return static_cast<int>(cu.bits() + cv.bits()) - static_cast<int>(cuv.bits());
}

int Expected(std::size_t l, std::size_t m, unsigned joint) {
  return std::max(0, static_cast<int>(l + m) - static_cast<int>(joint));
}

std::vector<ComplexityValue> PrefixComplexities(const Oracle& oracle,
                                                const BitString& s) {
  std::vector<BitString> prefixes;
  for (std::size_t i = 0; i <= s.size(); ++i) prefixes.push_back(s.Prefix(i));
  return oracle.Complexities(prefixes, {});
}

// Checks one edge of the profile, where one side is empty. `along` holds
// C of the prefixes of s.
bool EdgeOk(const Oracle& oracle, const BitString& s, bool s_is_first,
            const std::vector<ComplexityValue>& along, unsigned joint,
            unsigned slack) {
  std::vector<BitString> codes;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    codes.push_back(s_is_first ? PairEncode(s.Prefix(i), {})
                               : PairEncode({}, s.Prefix(i)));
  }
  const auto pair = oracle.Complexities(codes, {});
  const ComplexityValue empty = ComplexityValue::Exact(0);
  for (std::size_t i = 0; i <= s.size(); ++i) {
    const auto info = Info(along[i], empty, pair[i]);
    if (!info || std::abs(*info - Expected(i, 0, joint)) > static_cast<int>(slack)) {
      return false;
    }
  }
  return true;
}

std::optional<MuchnikPair> SearchAtSlack(const Oracle& oracle,
                                         const BitString& a, const BitString& b,
                                         unsigned s) {
  const unsigned ca = ExactBits(oracle.Complexity(a), "C(a)");
  const unsigned cb = ExactBits(oracle.Complexity(b), "C(b)");
  const unsigned joint = ExactBits(oracle.JointComplexity(a, b), "C(a,b)");
  if (ca + cb > 20) {
    throw ConstructionError(ConstructionErrc::kOracleCapped,
                            "search space 2^" + std::to_string(ca + cb) +
                                " exceeds 2^20");
  }
  std::size_t examined = 0;
  // a' first: the conditions that do not involve b'.
  std::vector<std::pair<BitString, unsigned>> as;
  for (const auto& [ap, k] : SimpleGiven(oracle, a, ca, s)) {
    if (EdgeOk(oracle, ap, true, PrefixComplexities(oracle, ap), joint, s)) {
      as.emplace_back(ap, k);
    }
  }
  if (as.empty()) return std::nullopt;
  std::vector<std::pair<BitString, unsigned>> bs;
  for (const auto& [bp, k] : SimpleGiven(oracle, b, cb, s)) {
    if (EdgeOk(oracle, bp, false, PrefixComplexities(oracle, bp), joint, s)) {
      bs.emplace_back(bp, k);
    }
  }
  for (const auto& [ap, ka] : as) {
    const auto ca_l = PrefixComplexities(oracle, ap);
    for (const auto& [bp, kb] : bs) {
      ++examined;
      const auto cb_m = PrefixComplexities(oracle, bp);
      std::vector<BitString> codes;
      for (std::size_t m = 0; m <= bp.size(); ++m) {
        for (std::size_t l = 0; l <= ap.size(); ++l) {
          codes.push_back(PairEncode(ap.Prefix(l), bp.Prefix(m)));
        }
      }
      const auto cj = oracle.Complexities(codes, {});
      MuchnikPair mp;
      mp.a_prime = ap;
      mp.b_prime = bp;
      mp.slack = s;
      mp.joint = joint;
      mp.a_prime_given_a = ka;
      mp.b_prime_given_b = kb;
      bool ok = true;
      std::size_t k = 0;
      for (std::size_t m = 0; m <= bp.size() && ok; ++m) {
        for (std::size_t l = 0; l <= ap.size(); ++l, ++k) {
          const auto info = Info(ca_l[l], cb_m[m], cj[k]);
          if (!info) {
            ok = false;
            break;
          }
          mp.profile.push_back(*info);
          mp.worst_profile =
              std::max(mp.worst_profile, std::abs(*info - Expected(l, m, joint)));
        }
      }
      if (ok && mp.worst_profile <= static_cast<int>(s)) {
        mp.pairs_examined = examined;
        return mp;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

MuchnikPair MuchnikPairSearch(const Oracle& oracle, const BitString& a,
                              const BitString& b, unsigned s) {
  if (auto mp = SearchAtSlack(oracle, a, b, s)) return *mp;
  for (unsigned t = s + kOpcodeBits; t <= 16; t += kOpcodeBits) {
    if (SearchAtSlack(oracle, a, b, t)) {
      throw ConstructionError(ConstructionErrc::kNoPairAtSlack,
                              "no pair at slack " + std::to_string(s) +
                                  "; least working slack is " +
                                  std::to_string(t));
    }
  }
  throw ConstructionError(ConstructionErrc::kNoPairAtSlack,
                          "no pair at slack " + std::to_string(s) +
                              " nor at any slack up to 16");
}

std::optional<MuchnikPair> MinimalMuchnikPair(const Oracle& oracle,
                                              const BitString& a,
                                              const BitString& b,
                                              unsigned max_slack) {
  for (unsigned s = 0; s <= max_slack; s += kOpcodeBits) {
    if (auto mp = SearchAtSlack(oracle, a, b, s)) return mp;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Theorem 3: y = (first l bits of a', first m bits of b') mapped to
// (C(a|y), C(b|y)).

std::vector<std::pair<BitString, BitString>> Thm3Candidates(
    const Oracle& oracle, std::size_t count) {
  std::vector<std::pair<BitString, unsigned>> pool;
  const ComplexityTable t = oracle.BuildTable({}, 5);
  for (const auto& [x, e] : t.entries()) {
    if (x.size() >= 3 && e.value.exact()) pool.emplace_back(x, e.value.bits());
  }
  auto shared = [](const BitString& a, const BitString& b) {
    std::size_t k = 0;
    while (k < a.size() && k < b.size() && a[k] == b[k]) ++k;
    return k;
  };
  std::vector<std::pair<BitString, BitString>> out;
  for (std::size_t i = 0; i < pool.size() && out.size() < count; ++i) {
    for (std::size_t k = i + 1; k < pool.size() && out.size() < count; ++k) {
      const auto& [a, ca] = pool[i];
      const auto& [b, cb] = pool[k];
      if (shared(a, b) >= 2 && ca + cb <= 20 &&
          oracle.JointComplexity(a, b).exact()) {
        out.emplace_back(a, b);
      }
    }
  }
  return out;
}

namespace {

// The parameter pentagon U V W X1 X2 Y Z as unit steps, counterclockwise
// from (0, 0). X1 to X2 is walked as a staircase.
std::vector<Node> PentagonNodes(int w, int h, int la, int mb) {
  std::vector<Node> nodes;
  auto walk = [&](Node to) {
    Node at = nodes.empty() ? Node{0, 0} : nodes.back();
    if (nodes.empty()) nodes.push_back(at);
    const int dl = std::abs(to.u - at.u);
    const int dm = std::abs(to.v - at.v);
    const int su = to.u > at.u ? 1 : -1;
    const int sv = to.v > at.v ? 1 : -1;
    int i = 0, j = 0;
    while (i < dl || j < dm) {
      if (j == dm || (i < dl && (2 * i + 1) * dm < (2 * j + 1) * dl)) {
        at.u += su;
        ++i;
      } else {
        at.v += sv;
        ++j;
      }
      nodes.push_back(at);
    }
  };
  walk({0, 0});
  walk({la, 0});      // V
  walk({w, 0});       // W
  walk({w, mb});      // X1
  walk({la, h});      // X2
  walk({0, h});       // Y
  walk({0, mb});      // Z
  walk({0, 0});
  nodes.pop_back();  // closed: the last step returns to U
  return nodes;
}

}  // namespace

Thm3Report Thm3Run(const Oracle& oracle, const BitString& a,
                   const BitString& b, const MuchnikPair& pair,
                   const Calibration& cal, const std::optional<Point>& target,
                   const ExperimentOptions& opts) {
  Thm3Report rep;
  rep.a = a;
  rep.b = b;
  rep.ca = ExactBits(oracle.Complexity(a), "C(a)");
  rep.cb = ExactBits(oracle.Complexity(b), "C(b)");
  rep.ca_given_b = ExactBits(oracle.Complexity(a, b), "C(a|b)");
  rep.cb_given_a = ExactBits(oracle.Complexity(b, a), "C(b|a)");
  rep.cab = ExactBits(oracle.JointComplexity(a, b), "C(a,b)");
  rep.mutual_info = static_cast<int>(rep.ca + rep.cb) - static_cast<int>(rep.cab);
  if (pair.a_prime.size() != rep.ca || pair.b_prime.size() != rep.cb) {
    throw ConstructionError(ConstructionErrc::kInvalidPair,
                            "|a'| and |b'| must equal C(a) and C(b)");
  }
  rep.pair = pair;

  const int w = static_cast<int>(rep.ca);
  const int h = static_cast<int>(rep.cb);
  auto y_at = [&](int l, int m) {
    return PairEncode(pair.a_prime.Prefix(l), pair.b_prime.Prefix(m));
  };
  rep.grid = EvaluateGrid(w, h, kMapStepLimit, opts.jobs, y_at,
                          [&](const BitString& y) {
                            return Point{
                                ExactBits(oracle.Complexity(a, y), "C(a|y)"),
                                ExactBits(oracle.Complexity(b, y), "C(b|y)")};
                          });
  rep.measured_step = MaxStep(rep.grid);
  RequireLipschitz(rep.grid, "theorem 3 grid for " + a.ToText() + ", " +
                                 b.ToText());
  rep.grid.set_step_bound(cal.c_map);

  const int la = std::min(w, static_cast<int>(rep.ca_given_b));
  const int mb = std::min(h, static_cast<int>(rep.cb_given_a));
  rep.pentagon = PentagonNodes(w, h, la, mb);
  LatticePath path;
  path.step_bound = cal.c_map;
  for (const Node& n : rep.pentagon) path.points.push_back(rep.grid.at(n));
  const std::int64_t ca_ = rep.ca, cb_ = rep.cb, info = rep.mutual_info;
  const std::vector<Point> hexagon = {{ca_, cb_},
                                      {info, cb_},
                                      {0, rep.cb_given_a},
                                      {0, 0},
                                      {rep.ca_given_b, 0},
                                      {ca_, info}};
  rep.trajectory = TrajectoryMatch(path, hexagon, cal.delta_hexagon);
  Sweep(rep.grid, rep.pentagon, y_at, rep.targets, rep.sweep);

  // Targets the ideal hexagon promises, as for theorem 1.
  const std::int64_t margin = cal.delta_hexagon + cal.c_map;
  const LatticePath ideal_loop{hexagon, 0};
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  for (const Point& p : hexagon) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  for (std::int64_t ty = y0; ty <= y1; ++ty) {
    for (std::int64_t tx = x0; tx <= x1; ++tx) {
      const Point t{tx, ty};
      bool clear = true;
      for (std::size_t k = 0; k < hexagon.size() && clear; ++k) {
        clear = SegmentDistance(t, hexagon[k], hexagon[(k + 1) % hexagon.size()]) >
                Fraction{margin, 1};
      }
      if (!clear || WindingNumber(ideal_loop, t) == 0) continue;
      ++rep.sweep.ideal_interior;
      if (SolveTarget(rep.grid, rep.pentagon, t).status == "found") {
        ++rep.sweep.ideal_interior_found;
      }
    }
  }

  for (int m = 0; m <= h; ++m) {
    for (int l = 0; l <= w; ++l) {
      if (l + m >= static_cast<int>(rep.cab)) {
        ++rep.triangle_nodes;
        rep.triangle_worst =
            std::max(rep.triangle_worst, SupDistance(rep.grid.at(l, m), {0, 0}));
      }
    }
  }
  bool target_ok = true;
  if (target) {
    TargetResult r = SolveTarget(rep.grid, rep.pentagon, *target);
    if (r.cert) r.y = y_at(r.cert->node.u, r.cert->node.v);
    target_ok = r.status == "found";
    rep.targets.insert(rep.targets.begin(), std::move(r));
  }
  rep.ok = target_ok && pair.worst_profile <= static_cast<int>(pair.slack) &&
           rep.triangle_worst <= static_cast<std::int64_t>(pair.slack) &&
           rep.sweep.failures == 0 && rep.trajectory.ok &&
           rep.measured_step <= cal.c_map;
  return rep;
}

json Thm3ReportToJson(const Thm3Report& r, const Calibration& cal) {
  json targets = json::array();
  for (const auto& t : r.targets) targets.push_back(TargetResultToJson(t));
  LatticePath path;
  path.step_bound = cal.c_map;
  for (const Node& n : r.pentagon) path.points.push_back(r.grid.at(n));
  const std::int64_t ca_ = r.ca, cb_ = r.cb, info = r.mutual_info;
  const std::vector<Point> hexagon = {{ca_, cb_},
                                      {info, cb_},
                                      {0, r.cb_given_a},
                                      {0, 0},
                                      {r.ca_given_b, 0},
                                      {ca_, info}};
  json j = Header("thm3", cal);
  j["instance"] = {{"a", Text(r.a)},
                   {"b", Text(r.b)},
                   {"C(a)", r.ca},
                   {"C(b)", r.cb},
                   {"C(a|b)", r.ca_given_b},
                   {"C(b|a)", r.cb_given_a},
                   {"C(a,b)", r.cab},
                   {"I(a:b)", r.mutual_info}};
  j["pair"] = {{"a_prime", Text(r.pair.a_prime)},
               {"b_prime", Text(r.pair.b_prime)},
               {"slack", r.pair.slack},
               {"C(a'|a)", r.pair.a_prime_given_a},
               {"C(b'|b)", r.pair.b_prime_given_b},
               {"profile", r.pair.profile},
               {"worst_profile", r.pair.worst_profile},
               {"pairs_examined", r.pair.pairs_examined}};
  j["grid"] = GridToJson(r.grid);
  j["measured_step"] = r.measured_step;
  j["pentagon"] = r.pentagon;
  j["trajectory"] =
      TrajectoryJson(path, hexagon, r.trajectory, cal.delta_hexagon);
  j["triangle"] = {{"nodes", r.triangle_nodes}, {"worst", r.triangle_worst}};
  j["sweep"] = SweepToJson(r.sweep);
  j["targets"] = targets;
  j["ok"] = r.ok;
  return j;
}

// ---------------------------------------------------------------------------

Calibration Calibrate(const Oracle& oracle, const CalibrationConfig& cfg) {
  Calibration cal;
  cal.machine_version = std::string(kMachineVersion);
  cal.params = oracle.params();
  cal.audit_len = cfg.audit_len;
  cal.z_len = cfg.z_len;
  const LipschitzAudit audit = oracle.AuditLipschitz(cfg.audit_len);
  cal.c_machine = audit.condition_side;
  cal.target_side = audit.target_side;

  // Provisional constants: measure first, freeze afterwards.
  Calibration probe = cal;
  probe.c_map = kMapStepLimit;
  probe.delta_boundary = probe.sigma = probe.delta_hexagon = 1 << 20;
  const ExperimentOptions opts{cfg.jobs};
  auto reject = [&](const std::string& what, const std::exception& e) {
    cal.rejected.push_back(what + ": " + e.what());
  };

  std::int64_t step = 0;
  for (const BitString& x : Thm1Candidates(oracle, 64)) {
    if (cal.thm1_x.size() >= cfg.thm1_count) break;
    try {
      const Thm1Instance inst = Thm1Build(oracle, x, cfg.z_len, opts);
      const Thm1Report r = Thm1Run(oracle, inst, probe);
      step = std::max(step, inst.measured_step);
      cal.delta_boundary =
          std::max(cal.delta_boundary, Ceil(r.trajectory.max_deviation));
      cal.thm1_x.push_back(x);
    } catch (const ConstructionError& e) {
      reject("thm1 x=" + x.ToText(), e);
    }
  }
  for (const auto& [a, b] : Thm2Candidates(oracle, 4 * cfg.thm2_count)) {
    if (cal.thm2_pairs.size() >= cfg.thm2_count) break;
    try {
      const Thm2Report r = Thm2Run(oracle, a, b, probe, std::nullopt, opts);
      step = std::max(step, r.measured_step);
      cal.sigma = std::max(cal.sigma, r.deviation);
      cal.thm2_pairs.emplace_back(a, b);
    } catch (const ConstructionError& e) {
      reject("thm2 a=" + a.ToText() + " b=" + b.ToText(), e);
    }
  }
  for (const auto& [a, b] : Thm3Candidates(oracle, 4 * cfg.thm3_count)) {
    if (cal.thm3_pairs.size() >= cfg.thm3_count) break;
    const auto mp = MinimalMuchnikPair(oracle, a, b, cfg.max_slack);
    if (!mp) {
      // Kept: a pair without a Muchnik pair is a finding, not a rejection.
      cal.thm3_pairs.emplace_back(a, b);
      continue;
    }
    try {
      const Thm3Report r = Thm3Run(oracle, a, b, *mp, probe, std::nullopt, opts);
      step = std::max(step, r.measured_step);
      cal.delta_hexagon =
          std::max(cal.delta_hexagon, Ceil(r.trajectory.max_deviation));
      cal.thm3_pairs.emplace_back(a, b);
    } catch (const ConstructionError& e) {
      reject("thm3 a=" + a.ToText() + " b=" + b.ToText(), e);
    }
  }
  cal.c_map = step;
  return cal;
}

}  // namespace aitl
