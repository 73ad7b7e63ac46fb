#include "aitl/bits.hpp"

namespace aitl {

namespace {

constexpr std::uint64_t LowMask(std::size_t n) {
  return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

}  // namespace

BitString BitString::FromWord(std::uint64_t word, std::size_t length) {
  if (length > kMaxBits) {
    throw BitsError(BitsErrc::kCapExceeded,
                    "bit string of length " + std::to_string(length));
  }
  BitString s;
  s.bits_ = word & LowMask(length);
  s.len_ = static_cast<std::uint8_t>(length);
  return s;
}

BitString BitString::Parse(std::string_view text) {
  if (text == "^") return {};
  if (text.size() > kMaxBits) {
    throw BitsError(BitsErrc::kCapExceeded, "text longer than 64 bits");
  }
  std::uint64_t w = 0;
  for (char c : text) {
    if (c != '0' && c != '1') {
      throw BitsError(BitsErrc::kBadText,
                      "not a bit string: '" + std::string(text) + "'");
    }
    w = (w << 1) | static_cast<std::uint64_t>(c - '0');
  }
  return FromWord(w, text.size());
}

BitString BitString::Prefix(std::size_t k) const {
  if (k > len_) throw BitsError(BitsErrc::kUnderflow, "prefix too long");
  return FromWord(k == 0 ? 0 : bits_ >> (len_ - k), k);
}

BitString BitString::Suffix(std::size_t k) const {
  if (k > len_) throw BitsError(BitsErrc::kUnderflow, "suffix too long");
  return FromWord(bits_, k);
}

BitString BitString::DropLast(std::size_t k) const {
  if (k > len_) {
    throw BitsError(BitsErrc::kUnderflow,
                    "cannot drop " + std::to_string(k) + " bits from " +
                        std::to_string(len_));
  }
  return Prefix(len_ - k);
}

bool BitString::TryAppend(bool bit, BitString& out) const noexcept {
  if (len_ >= kMaxBits) return false;
  out.bits_ = (bits_ << 1) | static_cast<std::uint64_t>(bit);
  out.len_ = static_cast<std::uint8_t>(len_ + 1);
  return true;
}

bool BitString::TryConcat(const BitString& other,
                          BitString& out) const noexcept {
  const std::size_t n = std::size_t{len_} + other.len_;
  if (n > kMaxBits) return false;
  const std::uint64_t head = other.len_ >= 64 ? 0 : bits_ << other.len_;
  out.bits_ = head | other.bits_;
  out.len_ = static_cast<std::uint8_t>(n);
  return true;
}

BitString BitString::Append(bool bit) const {
  BitString out;
  if (!TryAppend(bit, out)) {
    throw BitsError(BitsErrc::kCapExceeded, "append past 64 bits");
  }
  return out;
}

BitString BitString::Concat(const BitString& other) const {
  BitString out;
  if (!TryConcat(other, out)) {
    throw BitsError(BitsErrc::kCapExceeded, "concatenation past 64 bits");
  }
  return out;
}

bool BitString::IsPrefixOf(const BitString& other) const noexcept {
  if (len_ > other.len_) return false;
  if (len_ == 0) return true;
  return (other.bits_ >> (other.len_ - len_)) == bits_;
}

std::string BitString::ToText() const {
  if (len_ == 0) return "^";
  std::string s(len_, '0');
  for (std::size_t i = 0; i < len_; ++i) {
    if ((*this)[i]) s[i] = '1';
  }
  return s;
}

bool TryPairEncode(const BitString& first, const BitString& second,
                   BitString& out) noexcept {
  if (PairCodeLength(first.size(), second.size()) > kMaxBits) return false;
  std::uint64_t w = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const std::uint64_t b = first[i];
    w = (w << 2) | (b << 1) | b;
  }
  w = (w << 2) | 0b01;
  const auto head = BitString::FromWord(w, 2 * first.size() + 2);
  return head.TryConcat(second, out);
}

BitString PairEncode(const BitString& first, const BitString& second) {
  BitString out;
  if (!TryPairEncode(first, second, out)) {
    throw BitsError(BitsErrc::kCapExceeded,
                    "pair code of " +
                        std::to_string(PairCodeLength(first.size(),
                                                      second.size())) +
                        " bits");
  }
  return out;
}

bool TryPairDecode(const BitString& code, PairCode& out) noexcept {
  const std::size_t n = code.size();
  std::uint64_t first = 0;
  std::size_t i = 0;
  for (; i + 1 < n; i += 2) {
    const bool a = code[i];
    const bool b = code[i + 1];
    if (a == b) {
      first = (first << 1) | static_cast<std::uint64_t>(a);
      continue;
    }
    if (a) return false;  // "10" never appears at an even offset
    out.first = BitString::FromWord(first, i / 2);
    out.second = code.Suffix(n - i - 2);
    return true;
  }
  return false;
}

PairCode PairDecode(const BitString& code) {
  PairCode out;
  if (!TryPairDecode(code, out)) {
    throw BitsError(BitsErrc::kMalformedCode,
                    "malformed pair code " + code.ToText());
  }
  return out;
}

BitString DropLast(const BitString& s, std::size_t k) { return s.DropLast(k); }

}  // namespace aitl
