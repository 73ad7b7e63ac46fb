// aitl: batch front door for the complexity lab.
//
//   aitl [options] calibrate
//   aitl [options] table
//   aitl [options] run thm1|thm2|thm3|halve
//   aitl [options] verify <report.json>
//
// Exit codes: 0 success, 1 failed tolerance or other error, 2 an explicit
// target the boundary does not wind around (or touches), 3 oracle caps hit,
// 64 usage error (including missing fixtures).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "aitl/bits.hpp"
#include "aitl/constructions.hpp"
#include "aitl/io.hpp"
#include "aitl/oracle.hpp"
#include "aitl/topology.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitZeroWinding = 2;
constexpr int kExitCapped = 3;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  unsigned depth_cap = 16;
  unsigned fuel = 16;
  std::string out = "out";
  std::string fixtures = "fixtures/calibration.json";
  unsigned jobs = std::max(1U, std::thread::hardware_concurrency());
  std::size_t audit_len = 4;
  std::size_t thm1_count = 20;
  std::size_t thm2_count = 20;
  std::size_t thm3_count = 10;
  std::size_t z_len = 7;
  unsigned max_slack = 16;
  std::string x, a, b;
  std::string target;  // "n,m"
  std::int64_t t = 0;
  std::string conditions = "^";
  std::size_t max_len = 8;
  std::string experiment;
  std::string report;
};

fs::path CacheDir() {
  const char* env = std::getenv("AITL_CACHE_DIR");
  return env && *env ? fs::path(env) : fs::path(".aitl_cache");
}

std::string Dump(const json& j) { return j.dump(2) + "\n"; }

std::string Slug(const aitl::BitString& s) {
  return s.empty() ? "e" : s.ToText();
}

aitl::BitString ParseBits(const std::string& text, const char* what) {
  try {
    return aitl::BitString::Parse(text);
  } catch (const aitl::BitsError& e) {
    throw UsageError(std::string("bad --") + what + ": " + e.what());
  }
}

aitl::Point ParseTarget(const std::string& text) {
  std::istringstream is(text);
  aitl::Point p;
  char comma = 0;
  if (!(is >> p.x >> comma >> p.y) || comma != ',' || !is.eof()) {
    throw UsageError("bad --target '" + text + "', expected n,m");
  }
  return p;
}

// Loads every valid cache table built with the oracle's parameters.
void AbsorbCaches(const aitl::Oracle& oracle) {
  const fs::path dir = CacheDir();
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".aitl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    try {
      const aitl::ComplexityTable t = aitl::LoadTable(f);
      if (t.params().depth_cap == oracle.params().depth_cap &&
          t.params().fuel == oracle.params().fuel) {
        oracle.Absorb(t);
      }
    } catch (const aitl::OracleError& e) {
      std::cerr << "warning: ignoring cache " << f.string() << ": " << e.what()
                << "\n";
    }
  }
}

aitl::Calibration LoadFixture(const std::string& path) {
  if (!fs::exists(path)) {
    throw UsageError("fixtures not found at " + path +
                     " (run `aitl calibrate` first)");
  }
  json j;
  try {
    j = json::parse(aitl::ReadFile(path));
  } catch (const json::exception& e) {
    throw UsageError("fixtures at " + path + " are not valid JSON: " +
                     e.what());
  }
  aitl::Calibration cal = aitl::CalibrationFromJson(j);
  if (cal.machine_version != aitl::kMachineVersion) {
    throw UsageError("fixtures were frozen for machine " +
                     cal.machine_version + ", this build is " +
                     std::string(aitl::kMachineVersion));
  }
  return cal;
}

// The frozen constants a report depends on, without the instance lists.
json Constants(const aitl::Calibration& cal) {
  json j = aitl::CalibrationToJson(cal);
  for (const char* k : {"thm1_x", "thm2_pairs", "thm3_pairs", "rejected"}) {
    j.erase(k);
  }
  return j;
}

aitl::Calibration FromConstants(json j) {
  for (const char* k : {"thm1_x", "thm2_pairs", "thm3_pairs", "rejected"}) {
    j[k] = json::array();
  }
  return aitl::CalibrationFromJson(j);
}

// Everything needed to reproduce a run, stored in the report itself.
struct RunSpec {
  std::string experiment;
  aitl::BitString x, a, b;
  std::optional<aitl::Point> target;
  std::int64_t t = 0;
  std::size_t z_len = 0;
  unsigned max_slack = 0;

  json ToJson() const {
    json j = {{"experiment", experiment}};
    if (experiment == "thm1" || experiment == "halve") j["x"] = x.ToText();
    if (experiment == "thm2" || experiment == "thm3") {
      j["a"] = a.ToText();
      j["b"] = b.ToText();
    }
    if (experiment == "thm1") j["z_len"] = z_len;
    if (experiment == "thm3") j["max_slack"] = max_slack;
    if (experiment == "halve") j["t"] = t;
    j["requested_target"] = target ? json(*target) : json(nullptr);
    return j;
  }

  static RunSpec FromJson(const json& j) {
    RunSpec s;
    s.experiment = j.at("experiment").get<std::string>();
    auto bits = [&](const char* k) {
      return aitl::BitString::Parse(j.at(k).get<std::string>());
    };
    if (j.contains("x")) s.x = bits("x");
    if (j.contains("a")) s.a = bits("a");
    if (j.contains("b")) s.b = bits("b");
    if (j.contains("z_len")) s.z_len = j.at("z_len").get<std::size_t>();
    if (j.contains("max_slack")) s.max_slack = j.at("max_slack").get<unsigned>();
    if (j.contains("t")) s.t = j.at("t").get<std::int64_t>();
    if (!j.at("requested_target").is_null()) {
      s.target = j.at("requested_target").get<aitl::Point>();
    }
    return s;
  }

  std::string FileStem() const {
    std::string stem = experiment;
    if (experiment == "thm1") stem += "_x" + Slug(x);
    if (experiment == "thm2" || experiment == "thm3") {
      stem += "_a" + Slug(a) + "_b" + Slug(b);
    }
    if (experiment == "halve") stem += "_x" + Slug(x) + "_t" + std::to_string(t);
    if (target) {
      stem += "_target" + std::to_string(target->x) + "_" +
              std::to_string(target->y);
    }
    return stem;
  }
};

struct Outcome {
  json report;
  std::string csv;
  int code = kExitOk;
};

bool TargetNotEnclosed(const std::string& status) {
  return status == "zero_winding" || status == "boundary_too_close" ||
         status == "rect_zero_winding" || status == "rect_boundary_too_close";
}

int Verdict(bool ok, const std::optional<aitl::Point>& target,
            const std::vector<aitl::TargetResult>& targets) {
  if (target && TargetNotEnclosed(targets.front().status)) {
    return kExitZeroWinding;
  }
  return ok ? kExitOk : kExitFailed;
}

Outcome Execute(const RunSpec& spec, const aitl::Calibration& cal,
                const aitl::Oracle& oracle, unsigned jobs) {
  const aitl::ExperimentOptions opts{jobs};
  Outcome o;
  if (spec.experiment == "thm1") {
    const aitl::Thm1Instance inst =
        aitl::Thm1Build(oracle, spec.x, spec.z_len, opts);
    const aitl::Thm1Report r = aitl::Thm1Run(oracle, inst, cal, spec.target);
    o.report = aitl::Thm1ReportToJson(r, cal);
    o.csv = aitl::ReportCsv(r.instance.grid, aitl::BoundaryPath(r.instance.grid),
                            inst.Ideal());
    o.code = Verdict(r.ok, spec.target, r.targets);
  } else if (spec.experiment == "thm2") {
    const aitl::Thm2Report r =
        aitl::Thm2Run(oracle, spec.a, spec.b, cal, spec.target, opts);
    o.report = aitl::Thm2ReportToJson(r, cal);
    const std::vector<aitl::Point> ideal = {
        {0, 0},
        {r.grid.width(), 0},
        {r.grid.width(), r.grid.height()},
        {0, r.grid.height()}};
    o.csv = aitl::ReportCsv(r.grid, aitl::BoundaryPath(r.grid), ideal);
    o.code = Verdict(r.ok, spec.target, r.targets);
  } else if (spec.experiment == "thm3") {
    const auto pair =
        aitl::MinimalMuchnikPair(oracle, spec.a, spec.b, spec.max_slack);
    if (!pair) {
      o.report = {{"experiment", "thm3"},
                  {"machine_version", std::string(aitl::kMachineVersion)},
                  {"muchnik_pair", nullptr},
                  {"error", "no pair at any slack up to " +
                                std::to_string(spec.max_slack)},
                  {"ok", false}};
      o.code = kExitFailed;
    } else {
      const aitl::Thm3Report r = aitl::Thm3Run(oracle, spec.a, spec.b, *pair,
                                               cal, spec.target, opts);
      o.report = aitl::Thm3ReportToJson(r, cal);
      const json& traj = o.report.at("trajectory");
      aitl::LatticePath path;
      path.step_bound = cal.c_map;
      for (const auto& p : traj.at("boundary").at("points")) {
        path.points.push_back(p.get<aitl::Point>());
      }
      o.csv = aitl::ReportCsv(r.grid, path,
                              traj.at("ideal").get<std::vector<aitl::Point>>());
      o.code = Verdict(r.ok, spec.target, r.targets);
    }
  } else if (spec.experiment == "halve") {
    const aitl::HalveResult h =
        aitl::HalveInformation(oracle, spec.x, spec.t, cal.c_machine);
    const bool ok = std::abs(static_cast<std::int64_t>(h.achieved) -
                             h.clamped_target) <
                    static_cast<std::int64_t>(cal.c_machine);
    o.report = {{"experiment", "halve"},
                {"machine_version", std::string(aitl::kMachineVersion)},
                {"depth_cap", cal.params.depth_cap},
                {"fuel", cal.params.fuel},
                {"c_machine", cal.c_machine},
                {"instance", {{"x", spec.x.ToText()}, {"t", spec.t}}},
                {"profile", h.profile},
                {"clamped_target", h.clamped_target},
                {"index", h.index},
                {"y", h.y.ToText()},
                {"achieved", h.achieved},
                {"ok", ok}};
    std::ostringstream csv;
    csv << "i,prefix,C(x|prefix)\n";
    for (std::size_t i = 0; i < h.profile.size(); ++i) {
      csv << i << ',' << spec.x.Prefix(i).ToText() << ',' << h.profile[i]
          << '\n';
    }
    o.csv = csv.str();
    o.code = ok ? kExitOk : kExitFailed;
  } else {
    throw UsageError("unknown experiment '" + spec.experiment +
                     "' (expected thm1, thm2, thm3 or halve)");
  }
  o.report["config"] = spec.ToJson();
  o.report["calibration"] = Constants(cal);
  return o;
}

// Maps library failures onto exit codes, printing the reason.
template <typename Fn>
int Guarded(Fn fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const aitl::ConstructionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == aitl::ConstructionErrc::kOracleCapped) return kExitCapped;
    if (e.code() == aitl::ConstructionErrc::kBadFixture) return kExitUsage;
    return kExitFailed;
  } catch (const aitl::OracleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == aitl::OracleErrc::kNoWitness ||
        e.code() == aitl::OracleErrc::kIndeterminate) {
      return kExitCapped;
    }
    return kExitFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

int CmdCalibrate(const Options& o) {
  aitl::CalibrationConfig cfg;
  cfg.params = {o.depth_cap, o.fuel};
  cfg.audit_len = o.audit_len;
  cfg.thm1_count = o.thm1_count;
  cfg.thm2_count = o.thm2_count;
  cfg.thm3_count = o.thm3_count;
  cfg.z_len = o.z_len;
  cfg.max_slack = o.max_slack;
  cfg.jobs = o.jobs;
  const aitl::Oracle oracle(cfg.params);
  AbsorbCaches(oracle);
  std::cout << "calibrating (depth_cap=" << o.depth_cap << ", fuel=" << o.fuel
            << ")\n";
  const aitl::Calibration cal = aitl::Calibrate(oracle, cfg);
  std::cout << "c_machine=" << cal.c_machine << " c_map=" << cal.c_map
            << " delta_boundary=" << cal.delta_boundary
            << " sigma=" << cal.sigma << " delta_hexagon=" << cal.delta_hexagon
            << "\n";
  std::cout << cal.thm1_x.size() << " thm1, " << cal.thm2_pairs.size()
            << " thm2, " << cal.thm3_pairs.size() << " thm3 instances, "
            << cal.rejected.size() << " rejected\n";
  if (cal.thm1_x.size() < cfg.thm1_count ||
      cal.thm2_pairs.size() < cfg.thm2_count ||
      cal.thm3_pairs.size() < cfg.thm3_count) {
    std::cerr << "error: the oracle caps leave too few usable instances; "
                 "fixture not written\n";
    return kExitCapped;
  }
  aitl::WriteFileAtomic(o.fixtures, Dump(aitl::CalibrationToJson(cal)));
  std::cout << "wrote " << o.fixtures << "\n";
  return kExitOk;
}

int CmdTable(const Options& o) {
  const aitl::Oracle oracle({o.depth_cap, o.fuel});
  const fs::path dir = CacheDir();
  fs::create_directories(dir);
  std::vector<aitl::BitString> conds;
  std::stringstream ss(o.conditions);
  for (std::string item; std::getline(ss, item, ',');) {
    conds.push_back(ParseBits(item, "conditions"));
  }
  for (const aitl::BitString& c : conds) {
    const fs::path path = dir / aitl::TableFileName(c);
    if (fs::exists(path)) {
      try {
        const aitl::ComplexityTable t = aitl::LoadTable(path);
        if (t.params().depth_cap == o.depth_cap && t.params().fuel == o.fuel &&
            t.max_target_length() >= o.max_len) {
          std::cout << "cached " << path.string() << "\n";
          continue;
        }
        std::cout << "rebuilding " << path.string()
                  << " (different parameters)\n";
      } catch (const aitl::OracleError& e) {
        std::cerr << "warning: rebuilding " << path.string() << ": "
                  << e.what() << "\n";
      }
    }
    aitl::StoreTable(oracle.BuildTable(c, o.max_len), path);
    std::cout << "built " << path.string() << "\n";
  }
  return kExitOk;
}

RunSpec SpecFromOptions(const Options& o, const aitl::Calibration& cal) {
  RunSpec s;
  s.experiment = o.experiment;
  if (!o.target.empty()) s.target = ParseTarget(o.target);
  s.z_len = o.z_len;
  s.max_slack = o.max_slack;
  s.t = o.t;
  // Without explicit strings, the first frozen instance is the demo.
  if (s.experiment == "thm1" || s.experiment == "halve") {
    if (!o.x.empty()) {
      s.x = ParseBits(o.x, "x");
    } else if (!cal.thm1_x.empty()) {
      s.x = cal.thm1_x.front();
    } else {
      throw UsageError("--x is required");
    }
  }
  const auto& pairs = s.experiment == "thm2" ? cal.thm2_pairs : cal.thm3_pairs;
  if (s.experiment == "thm2" || s.experiment == "thm3") {
    if (o.a.empty() != o.b.empty()) {
      throw UsageError("--a and --b go together");
    }
    if (!o.a.empty()) {
      s.a = ParseBits(o.a, "a");
      s.b = ParseBits(o.b, "b");
    } else if (!pairs.empty()) {
      std::tie(s.a, s.b) = pairs.front();
    } else {
      throw UsageError("--a and --b are required");
    }
  }
  return s;
}

int CmdRun(const Options& o) {
  const aitl::Calibration cal = LoadFixture(o.fixtures);
  const RunSpec spec = SpecFromOptions(o, cal);
  const aitl::Oracle oracle(cal.params);
  AbsorbCaches(oracle);
  std::cout << "running " << spec.FileStem() << "\n";
  const Outcome out = Execute(spec, cal, oracle, o.jobs);
  fs::create_directories(o.out);
  const fs::path stem = fs::path(o.out) / spec.FileStem();
  aitl::WriteFileAtomic(stem.string() + ".json", Dump(out.report));
  aitl::WriteFileAtomic(stem.string() + ".csv", out.csv);
  std::cout << "wrote " << stem.string() << ".json and .csv\n";
  if (out.code == kExitZeroWinding) {
    std::cerr << "error: the requested target is not enclosed by the "
                 "boundary image with clearance > c_map\n";
  } else if (out.code != kExitOk) {
    std::cerr << "error: tolerances not met (see report)\n";
  }
  return out.code;
}

int CmdVerify(const Options& o) {
  json stored;
  try {
    stored = json::parse(aitl::ReadFile(o.report));
  } catch (const std::exception& e) {
    throw UsageError("cannot read report " + o.report + ": " + e.what());
  }
  if (!stored.contains("config") || !stored.contains("calibration")) {
    throw UsageError(o.report + " is not an experiment report");
  }
  const aitl::Calibration cal = FromConstants(stored.at("calibration"));
  if (cal.machine_version != aitl::kMachineVersion) {
    std::cerr << "error: report is for machine " << cal.machine_version
              << "\n";
    return kExitFailed;
  }
  const RunSpec spec = RunSpec::FromJson(stored.at("config"));
  const aitl::Oracle oracle(cal.params);
  AbsorbCaches(oracle);
  const Outcome fresh = Execute(spec, cal, oracle, o.jobs);
  if (fresh.report != stored) {
    for (const auto& [key, value] : stored.items()) {
      if (!fresh.report.contains(key) || fresh.report.at(key) != value) {
        std::cerr << "mismatch in \"" << key << "\"\n";
      }
    }
    std::cerr << "error: " << o.report << " does not reproduce\n";
    return kExitFailed;
  }
  std::cout << "verified " << o.report << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale algorithmic information experiments"};
  app.set_config("--config", "", "Flat key=value file; flags override it");
  app.fallthrough();
  app.require_subcommand(1);
  Options o;

  app.add_option("--depth_cap", o.depth_cap, "Search depth cap (instructions)")
      ->capture_default_str();
  app.add_option("--fuel", o.fuel, "Machine fuel")->capture_default_str();
  app.add_option("--out", o.out, "Report directory")->capture_default_str();
  app.add_option("--fixtures", o.fixtures, "Calibration fixture path")
      ->capture_default_str();
  app.add_option("--jobs", o.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--audit_len", o.audit_len, "Lipschitz audit length")
      ->capture_default_str();
  app.add_option("--thm1_count", o.thm1_count)->capture_default_str();
  app.add_option("--thm2_count", o.thm2_count)->capture_default_str();
  app.add_option("--thm3_count", o.thm3_count)->capture_default_str();
  app.add_option("--z_len", o.z_len, "Length of z in theorem 1")
      ->capture_default_str();
  app.add_option("--max_slack", o.max_slack, "Largest Muchnik slack tried")
      ->capture_default_str();
  app.add_option("--x", o.x, "String x (thm1, halve)");
  app.add_option("--a", o.a, "String a (thm2, thm3)");
  app.add_option("--b", o.b, "String b (thm2, thm3)");
  app.add_option("--target", o.target, "Explicit target n,m");
  app.add_option("--t", o.t, "Information target for halve");
  app.add_option("--conditions", o.conditions,
                 "Comma-separated conditions for table ('^' is empty)")
      ->capture_default_str();
  app.add_option("--max_len", o.max_len, "Target length covered by tables")
      ->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "Freeze the constants");
  auto* table = app.add_subcommand("table", "Build complexity caches");
  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("experiment", o.experiment, "thm1, thm2, thm3 or halve")
      ->required()
      ->check(CLI::IsMember({"thm1", "thm2", "thm3", "halve"}));
  auto* verify = app.add_subcommand("verify", "Recompute a report");
  verify->add_option("report", o.report, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (o.max_len > 12) {
    std::cerr << "usage error: --max_len is at most 12\n";
    return kExitUsage;
  }
  if (calibrate->parsed()) return Guarded([&] { return CmdCalibrate(o); });
  if (table->parsed()) return Guarded([&] { return CmdTable(o); });
  if (run->parsed()) return Guarded([&] { return CmdRun(o); });
  if (verify->parsed()) return Guarded([&] { return CmdVerify(o); });
  return kExitUsage;
}
