#pragma once

// The toy machine underlying every complexity value in the lab.
//
// A configuration is a pair of registers (cond, out). A program is a
// sequence of 4-bit opcodes; each opcode is a total deterministic transition
// on configurations. Operations that would leave the 64-bit cap, or that
// have nothing to act on, leave the configuration unchanged.
//
// Fuel is a per-level budget: a run at fuel f executes at most f
// instructions, and the nested computations started by EXE and SPG run at
// fuel f/2. Since the nested budget depends only on the level and never on
// the steps already spent, prepending an instruction to a program never
// changes what the rest of the program computes.

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "aitl/bits.hpp"

namespace aitl {

enum class Opcode : std::uint8_t {
  kOut0 = 0,   // out += 0
  kOut1 = 1,   // out += 1
  kCpy = 2,    // out += cond
  kDropC = 3,  // drop the last bit of cond
  kApc0 = 4,   // cond += 0
  kApc1 = 5,   // cond += 1
  kFst = 6,    // cond = first component of the pair code in cond
  kSnd = 7,    // cond = second component
  kExe = 8,    // cond = output of running cond as a program on empty input
  kSpg = 9,    // cond = shortest program printing cond
  kClr = 10,   // cond = empty
  kNop = 11,
  kPair = 12,  // out += PairEncode(cond, empty)
};

inline constexpr std::size_t kOpcodeBits = 4;
inline constexpr std::size_t kOpcodeCount = 13;
inline constexpr std::size_t kMaxInstructions = kMaxBits / kOpcodeBits;
/// SPG only considers programs of at most this many instructions.
inline constexpr std::size_t kSpgMaxInstructions = 8;
inline constexpr std::string_view kMachineVersion = "aitl-m13-f2-v1";

inline constexpr std::array<Opcode, kOpcodeCount> kAllOpcodes = {
    Opcode::kOut0, Opcode::kOut1, Opcode::kCpy,  Opcode::kDropC, Opcode::kApc0,
    Opcode::kApc1, Opcode::kFst,  Opcode::kSnd,  Opcode::kExe,   Opcode::kSpg,
    Opcode::kClr,  Opcode::kNop,  Opcode::kPair};

std::string_view OpcodeName(Opcode op);
std::optional<Opcode> ParseOpcode(std::string_view name);

using Program = std::vector<Opcode>;

BitString EncodeProgram(std::span<const Opcode> program);
/// Splits into 4-bit codes; trailing partial bits are ignored and codes with
/// no assigned opcode decode as NOP.
Program DecodeProgram(const BitString& bits);
std::string ProgramToText(std::span<const Opcode> program);

struct MachineConfig {
  BitString cond;
  BitString out;
  friend bool operator==(const MachineConfig&, const MachineConfig&) = default;
  template <typename H>
  friend H AbslHashValue(H h, const MachineConfig& c) {
    return H::combine(std::move(h), c.cond, c.out);
  }
};

/// Which outputs a search is looking for, and which partial outputs may
/// still lead to one. Outputs only ever grow, so a partial output that is
/// not a prefix of any target can be pruned.
class TargetSpec {
 public:
  static TargetSpec Single(const BitString& target);
  static TargetSpec Set(std::span<const BitString> targets);
  /// Every string of length <= max_length.
  static TargetSpec AllUpTo(std::size_t max_length);

  bool Viable(const BitString& out) const;
  bool IsTarget(const BitString& out) const;
  std::size_t count() const { return count_; }

 private:
  enum class Kind { kSingle, kSet, kAllUpTo };
  Kind kind_ = Kind::kSingle;
  BitString single_;
  std::size_t max_length_ = 0;
  std::size_t count_ = 0;
  std::shared_ptr<const absl::flat_hash_map<BitString, bool>> prefixes_;
};

struct SearchHit {
  unsigned depth = 0;
  BitString program;
};

struct SearchStats {
  std::size_t states = 0;
  unsigned depth_reached = 0;
};

using SearchHits = absl::flat_hash_map<BitString, SearchHit>;

/// The interpreter plus the breadth-first shortest-program search. Holds a
/// thread-safe memo of SPG results, so one instance should be shared.
class Machine {
 public:
  Machine() = default;
  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  /// Applies `op` at level `fuel`. Returns false if the instruction is stuck
  /// (the configuration would not change).
  bool Step(Opcode op, const MachineConfig& in, unsigned fuel,
            MachineConfig& next) const;

  BitString Run(std::span<const Opcode> program, const BitString& condition,
                unsigned fuel) const;
  BitString Run(const BitString& program, const BitString& condition,
                unsigned fuel) const;

  /// Breadth-first search over configurations reachable from
  /// (condition, empty), deduplicated by configuration, expanding opcodes in
  /// code order. Each hit carries the minimal depth and the lexicographically
  /// least program of that depth. Depth is bounded by min(depth_cap, fuel,
  /// 16).
  SearchHits Search(const BitString& condition, const TargetSpec& targets,
                    unsigned depth_cap, unsigned fuel,
                    SearchStats* stats = nullptr) const;

  /// SPG semantics at level `fuel`: the least shortest program of at most
  /// min(fuel/2, 8) instructions printing `target` at fuel/2.
  std::optional<BitString> ShortestProgramOf(const BitString& target,
                                             unsigned fuel) const;

 private:
  using OutputTable = absl::flat_hash_map<BitString, BitString>;
  const OutputTable& EmptyConditionTable(unsigned fuel) const;

  mutable std::shared_mutex mu_;
  mutable absl::flat_hash_map<unsigned, std::unique_ptr<OutputTable>> tables_;
};

}  // namespace aitl
