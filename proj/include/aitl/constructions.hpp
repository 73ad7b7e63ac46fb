#pragma once

// Grid constructions over the toy oracle. Each harness maps a rectangle of
// "bits kept" parameters to pairs of conditional complexities, certifies
// the map Lipschitz, compares its boundary with the ideal polygon, and
// looks for preimages of targets by winding-guided subdivision.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aitl/bits.hpp"
#include "aitl/oracle.hpp"
#include "aitl/topology.hpp"
#include "json.hpp"

namespace aitl {

enum class ConstructionErrc {
  kOracleCapped,
  kNoIncompressibleZ,
  kNoPairAtSlack,
  kInvalidPair,
  kNotLipschitz,
  kBadFixture,
};

class ConstructionError : public std::runtime_error {
 public:
  ConstructionError(ConstructionErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ConstructionErrc code() const noexcept { return code_; }

 private:
  ConstructionErrc code_;
};

/// Every grid must be Lipschitz with at most this step: two code bits per
/// grid step times the machine's 4-bit constant.
inline constexpr std::int64_t kMapStepLimit = 8;

/// Frozen calibration constants, all in bits.
struct Calibration {
  std::string machine_version;
  OracleParams params;
  std::size_t audit_len = 4;
  unsigned c_machine = 0;         // condition-side Lipschitz constant
  unsigned target_side = 0;       // target-side constant, reported only
  std::int64_t c_map = 0;         // grid step bound used by every harness
  std::int64_t delta_boundary = 0;
  std::int64_t sigma = 0;
  std::int64_t delta_hexagon = 0;
  std::size_t z_len = 7;
  std::vector<BitString> thm1_x;
  std::vector<std::pair<BitString, BitString>> thm2_pairs;
  std::vector<std::pair<BitString, BitString>> thm3_pairs;
  /// Generated instances rejected at build time, with the reason.
  std::vector<std::string> rejected;
};

struct CalibrationConfig {
  OracleParams params;
  std::size_t audit_len = 4;
  std::size_t thm1_count = 20;
  std::size_t thm2_count = 20;
  std::size_t thm3_count = 10;
  std::size_t z_len = 7;
  unsigned max_slack = 16;
  unsigned jobs = 1;
};

/// Generates the instance families, runs every harness and freezes the
/// measured constants.
Calibration Calibrate(const Oracle& oracle, const CalibrationConfig& cfg);

nlohmann::json CalibrationToJson(const Calibration& cal);
Calibration CalibrationFromJson(const nlohmann::json& j);

struct HalveResult {
  BitString y;
  std::size_t index = 0;  // |y|
  unsigned achieved = 0;  // C(x|y)
  std::int64_t clamped_target = 0;
  std::vector<std::int64_t> profile;  // C(x | first i bits of x)
};

/// A prefix y of x with |C(x|y) - t| < c_machine, found by the discrete
/// intermediate value theorem on C(x | first i bits of x).
HalveResult HalveInformation(const Oracle& oracle, const BitString& x,
                             std::int64_t t, std::int64_t c_machine);

/// One target's outcome on a grid.
struct TargetResult {
  Point target;
  std::string status;  // "found", "zero_winding", "boundary_too_close"
  int winding = 0;
  std::optional<PreimageCertificate> cert;
  BitString y;
  Point image;
};

nlohmann::json TargetResultToJson(const TargetResult& r);

/// Runs the winding test and preimage search for one target. The winding
/// and clearance are taken along `loop`, the parameter boundary to use.
TargetResult SolveTarget(const GridMap& map, const std::vector<Node>& loop,
                         const Point& target);

struct Thm1Instance {
  BitString x;
  BitString p;  // least shortest program for x
  BitString z;  // of maximal C(z|x) among strings of its length
  unsigned cx = 0;
  unsigned cz = 0;
  unsigned cz_given_x = 0;
  unsigned cz_given_p = 0;
  ComplexityValue cp_given_x = ComplexityValue::GreaterThan(0);
  GridMap grid;  // (u, v) = bits dropped from (p, z)
  std::int64_t measured_step = 0;

  BitString YAt(int u, int v) const;
  /// Ideal boundary waypoints in path order starting from node (0, 0).
  std::vector<Point> Ideal() const;
};

struct ExperimentOptions {
  unsigned jobs = 1;
};

/// Throws kOracleCapped or kNotLipschitz (against kMapStepLimit) when the
/// instance has to be rejected.
Thm1Instance Thm1Build(const Oracle& oracle, const BitString& x,
                       std::size_t z_len, const ExperimentOptions& opts = {});

/// A sweep over every integer target enclosed by the boundary image.
struct SweepSummary {
  std::size_t candidates = 0;
  std::size_t admissible = 0;  // winding != 0 and clearance > c_map
  std::size_t found = 0;       // admissible and distance <= 2 c_map
  std::size_t failures = 0;
  std::size_t ideal_interior = 0;  // promised by the ideal polygon
  std::size_t ideal_interior_found = 0;
};

nlohmann::json SweepToJson(const SweepSummary& s);

struct Thm1Report {
  Thm1Instance instance;
  TrajectoryReport trajectory;
  std::vector<TargetResult> targets;
  SweepSummary sweep;
  bool ok = false;
};

Thm1Report Thm1Run(const Oracle& oracle, const Thm1Instance& inst,
                   const Calibration& cal,
                   const std::optional<Point>& target = std::nullopt);
nlohmann::json Thm1ReportToJson(const Thm1Report& r, const Calibration& cal);

/// Strings of length 5 or 6 with C(x) >= 20 bits, shortest first.
std::vector<BitString> Thm1Candidates(const Oracle& oracle, std::size_t count);

struct Thm2Report {
  BitString a, b, p, q;
  unsigned ca = 0, cb = 0, cab = 0;
  int mutual_info = 0;
  GridMap grid;
  std::int64_t measured_step = 0;
  std::int64_t deviation = 0;  // max sup distance from the identity map
  TrajectoryReport trajectory;
  std::vector<TargetResult> targets;
  SweepSummary sweep;
  std::size_t sigma_interior = 0;
  std::size_t sigma_interior_found = 0;
  bool ok = false;
};

Thm2Report Thm2Run(const Oracle& oracle, const BitString& a,
                   const BitString& b, const Calibration& cal,
                   const std::optional<Point>& target = std::nullopt,
                   const ExperimentOptions& opts = {});
nlohmann::json Thm2ReportToJson(const Thm2Report& r, const Calibration& cal);

/// Length-5 pairs with C(a), C(b) >= 16 bits and I(a:b) <= 4 bits.
std::vector<std::pair<BitString, BitString>> Thm2Candidates(
    const Oracle& oracle, std::size_t count);

struct MuchnikPair {
  BitString a_prime, b_prime;
  unsigned slack = 0;
  unsigned joint = 0;  // K(a, b)
  /// I(a'_l : b'_m) for 0 <= l <= |a'|, 0 <= m <= |b'|, row-major in m.
  std::vector<int> profile;
  int worst_profile = 0;
  unsigned a_prime_given_a = 0;
  unsigned b_prime_given_b = 0;
  std::size_t pairs_examined = 0;
};

/// Lexicographically least (a', b') meeting the three conditions with
/// slack s. Throws kNoPairAtSlack naming the least working slack (searched
/// in steps of 4 up to 16 bits) when there is none.
MuchnikPair MuchnikPairSearch(const Oracle& oracle, const BitString& a,
                              const BitString& b, unsigned s);
/// The pair at the least slack in 0, 4, ..., max_slack, if any.
std::optional<MuchnikPair> MinimalMuchnikPair(const Oracle& oracle,
                                              const BitString& a,
                                              const BitString& b,
                                              unsigned max_slack);

struct Thm3Report {
  BitString a, b;
  unsigned ca = 0, cb = 0, ca_given_b = 0, cb_given_a = 0, cab = 0;
  int mutual_info = 0;
  MuchnikPair pair;
  GridMap grid;
  std::int64_t measured_step = 0;
  std::vector<Node> pentagon;
  TrajectoryReport trajectory;
  std::vector<TargetResult> targets;
  SweepSummary sweep;
  std::size_t triangle_nodes = 0;
  std::int64_t triangle_worst = 0;  // max distance from X' over the triangle
  bool ok = false;
};

Thm3Report Thm3Run(const Oracle& oracle, const BitString& a,
                   const BitString& b, const MuchnikPair& pair,
                   const Calibration& cal,
                   const std::optional<Point>& target = std::nullopt,
                   const ExperimentOptions& opts = {});
nlohmann::json Thm3ReportToJson(const Thm3Report& r, const Calibration& cal);

/// Distinct pairs of strings of length 3 to 5 sharing a prefix of at least
/// two bits, with C(a) + C(b) <= 20 bits.
std::vector<std::pair<BitString, BitString>> Thm3Candidates(
    const Oracle& oracle, std::size_t count);

nlohmann::json GridToJson(const GridMap& g);
/// Plot data: one row per grid node, boundary point and ideal waypoint.
std::string ReportCsv(const GridMap& grid, const LatticePath& boundary,
                      const std::vector<Point>& ideal);

}  // namespace aitl
