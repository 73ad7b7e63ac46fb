#include "aitl/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "aitl/io.hpp"

namespace aitl {

unsigned ComplexityValue::value() const {
  if (!exact()) {
    throw OracleError(OracleErrc::kIndeterminate,
                      "complexity exceeds search cap of " +
                          std::to_string(bits_) + " bits");
  }
  return bits_;
}

std::string ComplexityValue::ToText() const {
  return (exact() ? "" : ">") + std::to_string(bits_);
}

unsigned OracleParams::EffectiveDepth() const {
  return std::min<unsigned>(
      {depth_cap, fuel, static_cast<unsigned>(kMaxInstructions)});
}

ComplexityTable::ComplexityTable(BitString condition,
                                 std::size_t max_target_length,
                                 OracleParams params,
                                 std::string machine_version,
                                 std::map<BitString, OracleEntry> entries)
    : condition_(condition),
      max_target_length_(max_target_length),
      params_(params),
      machine_version_(std::move(machine_version)),
      entries_(std::move(entries)) {}

const OracleEntry& ComplexityTable::at(const BitString& target) const {
  auto it = entries_.find(target);
  if (it == entries_.end()) {
    throw OracleError(OracleErrc::kBadParams,
                      "target " + target.ToText() + " not in table");
  }
  return it->second;
}

bool operator==(const ComplexityTable& a, const ComplexityTable& b) {
  if (a.condition_ != b.condition_ ||
      a.max_target_length_ != b.max_target_length_ ||
      a.params_.depth_cap != b.params_.depth_cap ||
      a.params_.fuel != b.params_.fuel ||
      a.machine_version_ != b.machine_version_ ||
      a.entries_.size() != b.entries_.size()) {
    return false;
  }
  return std::equal(a.entries_.begin(), a.entries_.end(), b.entries_.begin(),
                    [](const auto& x, const auto& y) {
                      return x.first == y.first &&
                             x.second.value == y.second.value &&
                             x.second.witness == y.second.witness;
                    });
}

Oracle::Oracle(OracleParams params) : params_(params) {
  if (params_.depth_cap > kMaxInstructions) {
    throw OracleError(OracleErrc::kBadParams,
                      "depth cap above 16 instructions (64 program bits)");
  }
  if (params_.fuel == 0) {
    throw OracleError(OracleErrc::kBadParams, "fuel must be positive");
  }
}

std::optional<OracleEntry> Oracle::Cached(const Key& key) const {
  std::shared_lock lock(mu_);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  return std::nullopt;
}

void Oracle::Store(const Key& key, const OracleEntry& entry) const {
  std::unique_lock lock(mu_);
  memo_.try_emplace(key, entry);
}

std::size_t Oracle::memo_size() const {
  std::shared_lock lock(mu_);
  return memo_.size();
}

OracleEntry Oracle::Lookup(const BitString& target,
                           const BitString& condition) const {
  const Key key{condition, target};
  if (auto hit = Cached(key)) return *hit;
  const SearchHits hits =
      machine_.Search(condition, TargetSpec::Single(target),
                      params_.EffectiveDepth(), params_.fuel);
  OracleEntry entry;
  if (auto it = hits.find(target); it != hits.end()) {
    entry.value = ComplexityValue::Exact(it->second.depth * kOpcodeBits);
    entry.witness = it->second.program;
  } else {
    entry.value = ComplexityValue::GreaterThan(params_.CapBits());
  }
  Store(key, entry);
  return entry;
}

ComplexityValue Oracle::Complexity(const BitString& target,
                                   const BitString& condition) const {
  return Lookup(target, condition).value;
}

std::vector<ComplexityValue> Oracle::Complexities(
    std::span<const BitString> targets, const BitString& condition) const {
  std::vector<BitString> missing;
  for (const auto& t : targets) {
    if (!Cached({condition, t})) missing.push_back(t);
  }
  if (!missing.empty()) {
    const SearchHits hits =
        machine_.Search(condition, TargetSpec::Set(missing),
                        params_.EffectiveDepth(), params_.fuel);
    for (const auto& t : missing) {
      OracleEntry entry;
      if (auto it = hits.find(t); it != hits.end()) {
        entry.value = ComplexityValue::Exact(it->second.depth * kOpcodeBits);
        entry.witness = it->second.program;
      } else {
        entry.value = ComplexityValue::GreaterThan(params_.CapBits());
      }
      Store({condition, t}, entry);
    }
  }
  std::vector<ComplexityValue> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(Cached({condition, t})->value);
  return out;
}

BitString Oracle::ShortestProgram(const BitString& target,
                                  const BitString& condition) const {
  const OracleEntry e = Lookup(target, condition);
  if (!e.value.exact()) {
    throw OracleError(OracleErrc::kNoWitness,
                      "no program for " + target.ToText() + " within " +
                          std::to_string(e.value.bits()) + " bits");
  }
  return e.witness;
}

ComplexityValue Oracle::JointComplexity(const BitString& a,
                                        const BitString& b) const {
  BitString code;
  if (!TryPairEncode(a, b, code)) {
    return ComplexityValue::GreaterThan(params_.CapBits());
  }
  return Complexity(code);
}

int Oracle::MutualInfo(const BitString& a, const BitString& b) const {
  const ComplexityValue ca = Complexity(a);
  const ComplexityValue cb = Complexity(b);
  const ComplexityValue cab = JointComplexity(a, b);
  if (!ca.exact() || !cb.exact() || !cab.exact()) {
    throw OracleError(OracleErrc::kIndeterminate,
                      "mutual information of " + a.ToText() + ", " +
                          b.ToText() + " needs values above the cap");
  }
  return static_cast<int>(ca.bits()) + static_cast<int>(cb.bits()) -
         static_cast<int>(cab.bits());
}

ComplexityTable Oracle::BuildTable(const BitString& condition,
                                   std::size_t max_target_length) const {
  if (max_target_length > 12) {
    throw OracleError(OracleErrc::kBadParams,
                      "tables cover targets of at most 12 bits");
  }
  const SearchHits hits =
      machine_.Search(condition, TargetSpec::AllUpTo(max_target_length),
                      params_.EffectiveDepth(), params_.fuel);
  std::map<BitString, OracleEntry> entries;
  ForEachStringUpTo(max_target_length, [&](const BitString& t) {
    OracleEntry e;
    if (auto it = hits.find(t); it != hits.end()) {
      e.value = ComplexityValue::Exact(it->second.depth * kOpcodeBits);
      e.witness = it->second.program;
    } else {
      e.value = ComplexityValue::GreaterThan(params_.CapBits());
    }
    entries.emplace(t, e);
  });
  ComplexityTable table(condition, max_target_length, params_,
                        std::string(kMachineVersion), std::move(entries));
  Absorb(table);
  return table;
}

void Oracle::Absorb(const ComplexityTable& table) const {
  if (table.params().depth_cap != params_.depth_cap ||
      table.params().fuel != params_.fuel ||
      table.machine_version() != kMachineVersion) {
    throw OracleError(OracleErrc::kVersionMismatch,
                      "table built with different machine parameters");
  }
  std::unique_lock lock(mu_);
  for (const auto& [target, entry] : table.entries()) {
    memo_.try_emplace(Key{table.condition(), target}, entry);
  }
}

LipschitzAudit Oracle::AuditLipschitz(std::size_t max_len) const {
  if (max_len > 8) {
    throw OracleError(OracleErrc::kBadParams, "audit is exhaustive to 8 bits");
  }
  const std::size_t n = max_len + 1;
  absl::flat_hash_map<BitString, ComplexityTable> tables;
  ForEachStringUpTo(n, [&](const BitString& y) {
    tables.emplace(y, BuildTable(y, n));
  });

  LipschitzAudit audit;
  audit.max_len = max_len;
  auto c = [&](const BitString& x, const BitString& y) {
    return tables.at(y).at(x).value;
  };
  auto text = [](const BitString& x, const BitString& y, int b) {
    return "x=" + x.ToText() + " y=" + y.ToText() + " b=" + std::to_string(b);
  };
  ForEachStringUpTo(n, [&](const BitString& y) {
    for (const auto& [x, e] : tables.at(y).entries()) {
      if (!e.value.exact()) ++audit.greater_than_entries;
    }
  });
  ForEachStringUpTo(max_len, [&](const BitString& y) {
    ForEachStringUpTo(max_len, [&](const BitString& x) {
      const ComplexityValue base = c(x, y);
      for (int b = 0; b <= 1; ++b) {
        const ComplexityValue cond = c(x, y.Append(b));
        const ComplexityValue targ = c(x.Append(b), y);
        if (base.exact() && cond.exact()) {
          ++audit.pairs_checked;
          const unsigned d = base.bits() > cond.bits() ? base.bits() - cond.bits()
                                                       : cond.bits() - base.bits();
          if (d > audit.condition_side || audit.condition_side_worst.empty()) {
            audit.condition_side = d;
            audit.condition_side_worst = text(x, y, b);
          }
        }
        if (base.exact() && targ.exact()) {
          const unsigned d = base.bits() > targ.bits() ? base.bits() - targ.bits()
                                                       : targ.bits() - base.bits();
          if (d > audit.target_side || audit.target_side_worst.empty()) {
            audit.target_side = d;
            audit.target_side_worst = text(x, y, b);
          }
        }
      }
    });
  });
  return audit;
}

BitString Oracle::FindIncompressible(std::size_t length,
                                     const BitString& condition) const {
  if (length > 8) {
    throw OracleError(OracleErrc::kBadParams,
                      "incompressible search is exhaustive to 8 bits");
  }
  std::vector<BitString> all;
  ForEachString(length, [&](const BitString& s) { all.push_back(s); });
  const std::vector<ComplexityValue> values = Complexities(all, condition);
  // GreaterThan(d) ranks above every Exact value.
  auto rank = [](const ComplexityValue& v) {
    return 2 * v.bits() + (v.exact() ? 0 : 1);
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (rank(values[i]) > rank(values[best])) best = i;
  }
  return all[best];
}

namespace {

constexpr std::string_view kMagic = "AITL1";
constexpr std::string_view kColumns = "target,kind,bits,witness_hex";

std::string ToHex(const BitString& program) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (std::size_t i = 0; i + kOpcodeBits <= program.size(); i += kOpcodeBits) {
    const auto nib = (program.word() >> (program.size() - i - kOpcodeBits)) & 0xF;
    s += kDigits[nib];
  }
  return s;
}

BitString FromHex(std::string_view hex) {
  if (hex.size() > kMaxInstructions) {
    throw OracleError(OracleErrc::kCorruptCache, "witness too long");
  }
  std::uint64_t w = 0;
  for (char ch : hex) {
    unsigned v = 0;
    if (ch >= '0' && ch <= '9') {
      v = static_cast<unsigned>(ch - '0');
    } else if (ch >= 'a' && ch <= 'f') {
      v = static_cast<unsigned>(ch - 'a' + 10);
    } else {
      throw OracleError(OracleErrc::kCorruptCache, "bad witness hex");
    }
    w = (w << 4) | v;
  }
  return BitString::FromWord(w, hex.size() * 4);
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) {
      lines.push_back(text);
      break;
    }
    lines.push_back(text.substr(0, nl));
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::string_view HeaderValue(std::string_view line, std::string_view key) {
  if (line.size() <= key.size() || line.substr(0, key.size()) != key ||
      line[key.size()] != '=') {
    throw OracleError(OracleErrc::kCorruptCache,
                      "expected header '" + std::string(key) + "'");
  }
  return line.substr(key.size() + 1);
}

unsigned ParseUnsigned(std::string_view s) {
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw OracleError(OracleErrc::kCorruptCache,
                      "bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string SerializeTable(const ComplexityTable& table) {
  std::ostringstream body;
  body << kMagic << '\n'
       << "machine_version=" << table.machine_version() << '\n'
       << "depth_cap=" << table.params().depth_cap << '\n'
       << "fuel=" << table.params().fuel << '\n'
       << "condition=" << table.condition().ToText() << '\n'
       << "max_target_length=" << table.max_target_length() << '\n'
       << kColumns << '\n';
  for (const auto& [target, e] : table.entries()) {
    body << target.ToText() << ',' << (e.value.exact() ? "exact" : "gt") << ','
         << e.value.bits() << ',' << ToHex(e.witness) << '\n';
  }
  std::string text = body.str();
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x", Crc32(text));
  text += "crc32=";
  text += crc;
  text += '\n';
  return text;
}

ComplexityTable ParseTable(const std::string& text) {
  const auto tail = text.rfind("crc32=");
  if (tail == std::string::npos || (tail != 0 && text[tail - 1] != '\n')) {
    throw OracleError(OracleErrc::kCorruptCache, "missing checksum line");
  }
  std::string_view crc_line = std::string_view(text).substr(tail + 6);
  if (!crc_line.empty() && crc_line.back() == '\n') crc_line.remove_suffix(1);
  char expect[16];
  std::snprintf(expect, sizeof expect, "%08x",
                Crc32(std::string_view(text).substr(0, tail)));
  if (crc_line != expect) {
    throw OracleError(OracleErrc::kCorruptCache, "checksum mismatch");
  }

  const auto lines = SplitLines(std::string_view(text).substr(0, tail));
  if (lines.size() < 7 || lines[0] != kMagic) {
    throw OracleError(OracleErrc::kCorruptCache, "bad header");
  }
  const std::string version(HeaderValue(lines[1], "machine_version"));
  if (version != kMachineVersion) {
    throw OracleError(OracleErrc::kVersionMismatch,
                      "cache built by machine " + version + ", this is " +
                          std::string(kMachineVersion));
  }
  OracleParams params;
  params.depth_cap = ParseUnsigned(HeaderValue(lines[2], "depth_cap"));
  params.fuel = ParseUnsigned(HeaderValue(lines[3], "fuel"));
  BitString condition;
  try {
    condition = BitString::Parse(HeaderValue(lines[4], "condition"));
  } catch (const BitsError& e) {
    throw OracleError(OracleErrc::kCorruptCache, e.what());
  }
  const std::size_t max_len =
      ParseUnsigned(HeaderValue(lines[5], "max_target_length"));
  if (lines[6] != kColumns) {
    throw OracleError(OracleErrc::kCorruptCache, "bad column header");
  }

  std::map<BitString, OracleEntry> entries;
  for (std::size_t i = 7; i < lines.size(); ++i) {
    std::string_view row = lines[i];
    std::string_view fields[4];
    for (int f = 0; f < 3; ++f) {
      const auto comma = row.find(',');
      if (comma == std::string_view::npos) {
        throw OracleError(OracleErrc::kCorruptCache, "short row");
      }
      fields[f] = row.substr(0, comma);
      row.remove_prefix(comma + 1);
    }
    fields[3] = row;
    OracleEntry e;
    const unsigned bits = ParseUnsigned(fields[2]);
    if (fields[1] == "exact") {
      e.value = ComplexityValue::Exact(bits);
    } else if (fields[1] == "gt") {
      e.value = ComplexityValue::GreaterThan(bits);
    } else {
      throw OracleError(OracleErrc::kCorruptCache, "bad kind");
    }
    e.witness = FromHex(fields[3]);
    try {
      entries.emplace(BitString::Parse(fields[0]), e);
    } catch (const BitsError& err) {
      throw OracleError(OracleErrc::kCorruptCache, err.what());
    }
  }
  return ComplexityTable(condition, max_len, params, version,
                         std::move(entries));
}

void StoreTable(const ComplexityTable& table,
                const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeTable(table));
}

ComplexityTable LoadTable(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const std::exception& e) {
    throw OracleError(OracleErrc::kIo, e.what());
  }
  return ParseTable(text);
}

std::string TableFileName(const BitString& condition) {
  return "cond_" + (condition.empty() ? std::string("e") : condition.ToText()) +
         ".aitl";
}

}  // namespace aitl
