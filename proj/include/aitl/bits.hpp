#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aitl {

/// Hard length cap for every string in the lab (one machine word).
inline constexpr std::size_t kMaxBits = 64;

enum class BitsErrc { kCapExceeded, kMalformedCode, kUnderflow, kBadText };

class BitsError : public std::runtime_error {
 public:
  BitsError(BitsErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  BitsErrc code() const noexcept { return code_; }

 private:
  BitsErrc code_;
};

/// A finite bit sequence of length 0..64.
///
/// Bits are held right-aligned in a 64-bit word with the first bit most
/// significant, so that for equal lengths numeric order of `word()` is
/// lexicographic order of the sequence.
class BitString {
 public:
  constexpr BitString() = default;

  /// Builds a string from the low `length` bits of `word`.
  static BitString FromWord(std::uint64_t word, std::size_t length);
  /// Parses the canonical text form ('0'/'1', empty rendered "^").
  static BitString Parse(std::string_view text);

  constexpr std::size_t size() const noexcept { return len_; }
  constexpr bool empty() const noexcept { return len_ == 0; }
  constexpr std::uint64_t word() const noexcept { return bits_; }

  /// Bit at position i, counted from the start.
  bool operator[](std::size_t i) const noexcept {
    return (bits_ >> (len_ - 1 - i)) & 1U;
  }

  BitString Prefix(std::size_t k) const;
  BitString Suffix(std::size_t k) const;
  BitString DropLast(std::size_t k) const;

  /// Returns *this followed by `bit`; throws kCapExceeded at the cap.
  BitString Append(bool bit) const;
  BitString Concat(const BitString& other) const;

  /// Non-throwing forms used on the interpreter's hot path.
  bool TryAppend(bool bit, BitString& out) const noexcept;
  bool TryConcat(const BitString& other, BitString& out) const noexcept;

  bool IsPrefixOf(const BitString& other) const noexcept;

  std::string ToText() const;

  friend constexpr bool operator==(const BitString&, const BitString&) = default;

  /// Shorter strings first, then lexicographic.
  friend constexpr std::strong_ordering operator<=>(const BitString& a,
                                                    const BitString& b) {
    if (auto c = a.len_ <=> b.len_; c != 0) return c;
    return a.bits_ <=> b.bits_;
  }

  template <typename H>
  friend H AbslHashValue(H h, const BitString& s) {
    return H::combine(std::move(h), s.bits_, s.len_);
  }

 private:
  std::uint64_t bits_ = 0;
  std::uint8_t len_ = 0;
};

/// Enumerates all strings of exactly `length` bits in lexicographic order.
template <typename F>
void ForEachString(std::size_t length, F&& fn) {
  const std::uint64_t count = std::uint64_t{1} << length;
  for (std::uint64_t w = 0; w < count; ++w) fn(BitString::FromWord(w, length));
}

/// Enumerates all strings of length 0..max_length, shorter first.
template <typename F>
void ForEachStringUpTo(std::size_t max_length, F&& fn) {
  for (std::size_t n = 0; n <= max_length; ++n) ForEachString(n, fn);
}

struct PairCode {
  BitString first;
  BitString second;
  friend bool operator==(const PairCode&, const PairCode&) = default;
};

/// Length of the self-delimiting code for (first, second).
constexpr std::size_t PairCodeLength(std::size_t first, std::size_t second) {
  return 2 * first + 2 + second;
}

/// Self-delimiting pairing: every bit of `first` doubled, then "01", then
/// `second` raw. Throws kCapExceeded past 64 bits.
BitString PairEncode(const BitString& first, const BitString& second);
bool TryPairEncode(const BitString& first, const BitString& second,
                   BitString& out) noexcept;

/// Inverse of PairEncode. Throws kMalformedCode when no "01" terminator
/// appears at an even offset after a run of doubled bits.
PairCode PairDecode(const BitString& code);
bool TryPairDecode(const BitString& code, PairCode& out) noexcept;

/// Prefix of length |s| - k; throws kUnderflow when k > |s|.
BitString DropLast(const BitString& s, std::size_t k);

}  // namespace aitl

template <>
struct std::hash<aitl::BitString> {
  std::size_t operator()(const aitl::BitString& s) const noexcept {
    return std::hash<std::uint64_t>{}(s.word() * 0x9E3779B97F4A7C15ULL ^
                                      s.size());
  }
};
