#include "aitl/machine.hpp"

#include <algorithm>
#include <tuple>

#include "absl/container/flat_hash_set.h"

namespace aitl {

namespace {

constexpr std::array<std::string_view, kOpcodeCount> kNames = {
    "OUT0", "OUT1", "CPY", "DROPC", "APC0", "APC1", "FST",
    "SND",  "EXE",  "SPG", "CLR",   "NOP",  "PAIR"};

}  // namespace

std::string_view OpcodeName(Opcode op) {
  return kNames[static_cast<std::size_t>(op)];
}

std::optional<Opcode> ParseOpcode(std::string_view name) {
  for (std::size_t i = 0; i < kOpcodeCount; ++i) {
    if (kNames[i] == name) return static_cast<Opcode>(i);
  }
  return std::nullopt;
}

BitString EncodeProgram(std::span<const Opcode> program) {
  if (program.size() > kMaxInstructions) {
    throw BitsError(BitsErrc::kCapExceeded, "program longer than 16 opcodes");
  }
  std::uint64_t w = 0;
  for (Opcode op : program) w = (w << kOpcodeBits) | static_cast<unsigned>(op);
  return BitString::FromWord(w, program.size() * kOpcodeBits);
}

Program DecodeProgram(const BitString& bits) {
  Program program;
  const std::size_t n = bits.size() / kOpcodeBits;
  program.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto code = static_cast<unsigned>(
        (bits.word() >> (bits.size() - kOpcodeBits * (i + 1))) & 0xF);
    program.push_back(code < kOpcodeCount ? static_cast<Opcode>(code)
                                          : Opcode::kNop);
  }
  return program;
}

std::string ProgramToText(std::span<const Opcode> program) {
  std::string s;
  for (Opcode op : program) {
    if (!s.empty()) s += ' ';
    s += OpcodeName(op);
  }
  return s.empty() ? "(empty)" : s;
}

TargetSpec TargetSpec::Single(const BitString& target) {
  TargetSpec spec;
  spec.kind_ = Kind::kSingle;
  spec.single_ = target;
  spec.count_ = 1;
  return spec;
}

TargetSpec TargetSpec::Set(std::span<const BitString> targets) {
  auto prefixes = std::make_shared<absl::flat_hash_map<BitString, bool>>();
  for (const auto& t : targets) {
    for (std::size_t k = 0; k < t.size(); ++k) prefixes->try_emplace(t.Prefix(k), false);
    (*prefixes)[t] = true;
  }
  TargetSpec spec;
  spec.kind_ = Kind::kSet;
  spec.count_ = 0;
  for (const auto& [s, is_target] : *prefixes) spec.count_ += is_target;
  spec.prefixes_ = std::move(prefixes);
  return spec;
}

TargetSpec TargetSpec::AllUpTo(std::size_t max_length) {
  TargetSpec spec;
  spec.kind_ = Kind::kAllUpTo;
  spec.max_length_ = max_length;
  spec.count_ = max_length >= 63 ? ~std::size_t{0}
                                 : (std::size_t{2} << max_length) - 1;
  return spec;
}

bool TargetSpec::Viable(const BitString& out) const {
  switch (kind_) {
    case Kind::kSingle:
      return out.IsPrefixOf(single_);
    case Kind::kSet:
      return prefixes_->contains(out);
    case Kind::kAllUpTo:
      return out.size() <= max_length_;
  }
  return false;
}

bool TargetSpec::IsTarget(const BitString& out) const {
  switch (kind_) {
    case Kind::kSingle:
      return out == single_;
    case Kind::kSet: {
      auto it = prefixes_->find(out);
      return it != prefixes_->end() && it->second;
    }
    case Kind::kAllUpTo:
      return out.size() <= max_length_;
  }
  return false;
}

bool Machine::Step(Opcode op, const MachineConfig& in, unsigned fuel,
                   MachineConfig& next) const {
  next = in;
  switch (op) {
    case Opcode::kOut0:
    case Opcode::kOut1:
      return in.out.TryAppend(op == Opcode::kOut1, next.out);
    case Opcode::kCpy:
      return !in.cond.empty() && in.out.TryConcat(in.cond, next.out);
    case Opcode::kDropC:
      if (in.cond.empty()) return false;
      next.cond = in.cond.DropLast(1);
      return true;
    case Opcode::kApc0:
    case Opcode::kApc1:
      return in.cond.TryAppend(op == Opcode::kApc1, next.cond);
    case Opcode::kFst:
    case Opcode::kSnd: {
      PairCode pc;
      if (!TryPairDecode(in.cond, pc)) return false;
      next.cond = op == Opcode::kFst ? pc.first : pc.second;
      return next.cond != in.cond;
    }
    case Opcode::kExe:
      if (fuel / 2 == 0) return false;
      next.cond = Run(in.cond, BitString{}, fuel / 2);
      return next.cond != in.cond;
    case Opcode::kSpg: {
      auto p = ShortestProgramOf(in.cond, fuel);
      if (!p) return false;
      next.cond = *p;
      return next.cond != in.cond;
    }
    case Opcode::kClr:
      if (in.cond.empty()) return false;
      next.cond = BitString{};
      return true;
    case Opcode::kNop:
      return false;
    case Opcode::kPair: {
      BitString code;
      return TryPairEncode(in.cond, BitString{}, code) &&
             in.out.TryConcat(code, next.out);
    }
  }
  return false;
}

BitString Machine::Run(std::span<const Opcode> program,
                       const BitString& condition, unsigned fuel) const {
  MachineConfig cfg{condition, BitString{}};
  MachineConfig next;
  const std::size_t n = std::min<std::size_t>(program.size(), fuel);
  for (std::size_t i = 0; i < n; ++i) {
    if (Step(program[i], cfg, fuel, next)) cfg = next;
  }
  return cfg.out;
}

BitString Machine::Run(const BitString& program, const BitString& condition,
                       unsigned fuel) const {
  const Program ops = DecodeProgram(program);
  return Run(std::span<const Opcode>(ops), condition, fuel);
}

namespace {

// Search nodes are packed to 24 bytes; the visited set holds node indices.
struct Node {
  std::uint64_t cond_bits;
  std::uint64_t out_bits;
  std::int32_t parent;
  std::uint8_t cond_len;
  std::uint8_t out_len;
  Opcode op;

  MachineConfig config() const {
    return {BitString::FromWord(cond_bits, cond_len),
            BitString::FromWord(out_bits, out_len)};
  }
  static Node Make(const MachineConfig& c, std::int32_t parent, Opcode op) {
    return {c.cond.word(), c.out.word(), parent,
            static_cast<std::uint8_t>(c.cond.size()),
            static_cast<std::uint8_t>(c.out.size()), op};
  }
};

struct NodeHash {
  const std::vector<Node>* nodes;
  std::size_t operator()(std::uint32_t i) const {
    const Node& n = (*nodes)[i];
    return absl::Hash<std::tuple<std::uint64_t, std::uint64_t, std::uint8_t, std::uint8_t>>{}(
        std::make_tuple(n.cond_bits, n.out_bits, n.cond_len, n.out_len));
  }
};

struct NodeEq {
  const std::vector<Node>* nodes;
  bool operator()(std::uint32_t a, std::uint32_t b) const {
    const Node& x = (*nodes)[a];
    const Node& y = (*nodes)[b];
    return x.cond_bits == y.cond_bits && x.out_bits == y.out_bits &&
           x.cond_len == y.cond_len && x.out_len == y.out_len;
  }
};

}  // namespace

SearchHits Machine::Search(const BitString& condition,
                           const TargetSpec& targets, unsigned depth_cap,
                           unsigned fuel, SearchStats* stats) const {
  const unsigned limit = std::min<unsigned>(
      {depth_cap, fuel, static_cast<unsigned>(kMaxInstructions)});

  std::vector<Node> nodes;
  absl::flat_hash_set<std::uint32_t, NodeHash, NodeEq> visited(
      0, NodeHash{&nodes}, NodeEq{&nodes});
  SearchHits hits;

  auto witness = [&nodes](std::int32_t i) {
    Program ops;
    for (; nodes[i].parent >= 0; i = nodes[i].parent) ops.push_back(nodes[i].op);
    std::reverse(ops.begin(), ops.end());
    return EncodeProgram(ops);
  };
  auto record = [&](std::int32_t i, const BitString& out, unsigned depth) {
    if (targets.IsTarget(out) && !hits.contains(out)) {
      hits.emplace(out, SearchHit{depth, witness(i)});
    }
  };

  const MachineConfig start{condition, BitString{}};
  unsigned depth = 0;
  if (targets.Viable(start.out)) {
    nodes.push_back(Node::Make(start, -1, Opcode::kNop));
    visited.insert(0);
    record(0, start.out, 0);
  }

  std::size_t begin = 0;
  while (depth < limit && hits.size() < targets.count()) {
    const std::size_t end = nodes.size();
    if (begin == end) break;
    ++depth;
    for (std::size_t i = begin; i < end && hits.size() < targets.count(); ++i) {
      const MachineConfig cfg = nodes[i].config();
      for (Opcode op : kAllOpcodes) {
        MachineConfig next;
        if (!Step(op, cfg, fuel, next)) continue;
        if (!targets.Viable(next.out)) continue;
        nodes.push_back(Node::Make(next, static_cast<std::int32_t>(i), op));
        const auto idx = static_cast<std::uint32_t>(nodes.size() - 1);
        if (!visited.insert(idx).second) {
          nodes.pop_back();
          continue;
        }
        record(static_cast<std::int32_t>(idx), next.out, depth);
        if (hits.size() >= targets.count()) break;
      }
    }
    begin = end;
  }
  if (stats) {
    stats->states = nodes.size();
    stats->depth_reached = depth;
  }
  return hits;
}

const Machine::OutputTable& Machine::EmptyConditionTable(unsigned fuel) const {
  {
    std::shared_lock lock(mu_);
    if (auto it = tables_.find(fuel); it != tables_.end()) return *it->second;
  }
  const unsigned depth =
      std::min<unsigned>(fuel, static_cast<unsigned>(kSpgMaxInstructions));
  // Built without the lock: the search itself recurses into lower levels.
  SearchHits hits = Search(BitString{}, TargetSpec::AllUpTo(kMaxBits), depth,
                           fuel);
  auto table = std::make_unique<OutputTable>();
  table->reserve(hits.size());
  for (auto& [out, hit] : hits) table->emplace(out, hit.program);

  std::unique_lock lock(mu_);
  auto [it, inserted] = tables_.try_emplace(fuel, std::move(table));
  return *it->second;
}

std::optional<BitString> Machine::ShortestProgramOf(const BitString& target,
                                                    unsigned fuel) const {
  const unsigned sub = fuel / 2;
  if (sub == 0) return std::nullopt;
  const OutputTable& table = EmptyConditionTable(sub);
  if (auto it = table.find(target); it != table.end()) return it->second;
  return std::nullopt;
}

}  // namespace aitl
