#pragma once

// Exact toy conditional complexity C(x|y): the length in bits of the
// shortest program that prints x from condition y on the toy machine,
// computed by breadth-first search and memoized.

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "aitl/bits.hpp"
#include "aitl/machine.hpp"

namespace aitl {

enum class OracleErrc {
  kNoWitness,
  kIndeterminate,
  kVersionMismatch,
  kCorruptCache,
  kBadParams,
  kIo,
};

class OracleError : public std::runtime_error {
 public:
  OracleError(OracleErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  OracleErrc code() const noexcept { return code_; }

 private:
  OracleErrc code_;
};

/// Exact(k): a k-bit program exists and none shorter does.
/// GreaterThan(d): no program of at most d bits was found.
class ComplexityValue {
 public:
  enum class Kind { kExact, kGreaterThan };

  static constexpr ComplexityValue Exact(unsigned bits) {
    return ComplexityValue(Kind::kExact, bits);
  }
  static constexpr ComplexityValue GreaterThan(unsigned cap_bits) {
    return ComplexityValue(Kind::kGreaterThan, cap_bits);
  }

  constexpr Kind kind() const { return kind_; }
  constexpr bool exact() const { return kind_ == Kind::kExact; }
  constexpr unsigned bits() const { return bits_; }

  /// Exact bit count; throws kIndeterminate for GreaterThan values.
  unsigned value() const;
  std::string ToText() const;

  friend constexpr bool operator==(const ComplexityValue&,
                                   const ComplexityValue&) = default;

 private:
  constexpr ComplexityValue(Kind k, unsigned b) : kind_(k), bits_(b) {}
  Kind kind_ = Kind::kGreaterThan;
  unsigned bits_ = 0;
};

struct OracleParams {
  unsigned depth_cap = 16;  // instructions
  unsigned fuel = 16;
  /// Effective search depth: min(depth_cap, fuel, 16).
  unsigned EffectiveDepth() const;
  unsigned CapBits() const { return EffectiveDepth() * kOpcodeBits; }
};

struct OracleEntry {
  ComplexityValue value = ComplexityValue::GreaterThan(0);
  BitString witness;  // empty unless value is Exact
};

/// Complexities of every target of length <= max_target_length given one
/// condition. Immutable once built.
class ComplexityTable {
 public:
  ComplexityTable() = default;
  ComplexityTable(BitString condition, std::size_t max_target_length,
                  OracleParams params, std::string machine_version,
                  std::map<BitString, OracleEntry> entries);

  const BitString& condition() const { return condition_; }
  std::size_t max_target_length() const { return max_target_length_; }
  const OracleParams& params() const { return params_; }
  const std::string& machine_version() const { return machine_version_; }
  const std::map<BitString, OracleEntry>& entries() const { return entries_; }

  const OracleEntry& at(const BitString& target) const;

  friend bool operator==(const ComplexityTable& a, const ComplexityTable& b);

 private:
  BitString condition_;
  std::size_t max_target_length_ = 0;
  OracleParams params_;
  std::string machine_version_;
  std::map<BitString, OracleEntry> entries_;
};

struct LipschitzAudit {
  std::size_t max_len = 0;
  /// max |C(x|y·b) - C(x|y)| over Exact pairs.
  unsigned condition_side = 0;
  /// max |C(x·b|y) - C(x|y)| over Exact pairs.
  unsigned target_side = 0;
  std::size_t pairs_checked = 0;
  std::size_t greater_than_entries = 0;
  /// A pair attaining each maximum, as (x, y, b).
  std::string condition_side_worst;
  std::string target_side_worst;
};

/// The oracle: complexity queries against one machine with fixed caps.
/// Thread-safe; results are memoized per (condition, target).
class Oracle {
 public:
  explicit Oracle(OracleParams params = {});

  const OracleParams& params() const { return params_; }
  const Machine& machine() const { return machine_; }

  ComplexityValue Complexity(const BitString& target,
                             const BitString& condition = {}) const;
  /// One search serving many targets under the same condition.
  std::vector<ComplexityValue> Complexities(std::span<const BitString> targets,
                                            const BitString& condition) const;
  /// Full entry, including the witness program.
  OracleEntry Lookup(const BitString& target, const BitString& condition) const;

  /// Least program of minimal length; throws kNoWitness when capped.
  BitString ShortestProgram(const BitString& target,
                            const BitString& condition = {}) const;

  /// C(a, b) = C(PairEncode(a, b) | empty).
  ComplexityValue JointComplexity(const BitString& a,
                                  const BitString& b) const;
  /// I(a:b) = C(a) + C(b) - C(a, b); throws kIndeterminate if any is capped.
  int MutualInfo(const BitString& a, const BitString& b) const;

  /// Exhaustive Lipschitz audit for all |x|, |y| <= max_len.
  LipschitzAudit AuditLipschitz(std::size_t max_len) const;

  /// A string of the given length maximizing C(z|condition); the
  /// lexicographically least maximizer.
  BitString FindIncompressible(std::size_t length,
                               const BitString& condition = {}) const;

  ComplexityTable BuildTable(const BitString& condition,
                             std::size_t max_target_length) const;
  /// Seeds the memo from a table built with identical parameters.
  void Absorb(const ComplexityTable& table) const;

  std::size_t memo_size() const;

 private:
  using Key = std::pair<BitString, BitString>;  // (condition, target)

  std::optional<OracleEntry> Cached(const Key& key) const;
  void Store(const Key& key, const OracleEntry& entry) const;

  OracleParams params_;
  Machine machine_;
  mutable std::shared_mutex mu_;
  mutable absl::flat_hash_map<Key, OracleEntry> memo_;
};

/// Cache file I/O. The format is a text header ("AITL1", machine version,
/// depth cap, fuel, condition, target length), CSV rows
/// `target,kind,bits,witness_hex`, and a trailing `crc32=` line over all
/// preceding bytes.
std::string SerializeTable(const ComplexityTable& table);
ComplexityTable ParseTable(const std::string& text);
void StoreTable(const ComplexityTable& table, const std::filesystem::path& path);
ComplexityTable LoadTable(const std::filesystem::path& path);

/// Cache file name for a condition, e.g. "cond_0110.aitl" ("cond_e" for the
/// empty condition).
std::string TableFileName(const BitString& condition);

}  // namespace aitl
