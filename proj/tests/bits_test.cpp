#include <random>

#include "aitl/bits.hpp"
#include "gtest/gtest.h"

namespace aitl {
namespace {

BitString B(const char* text) { return BitString::Parse(text); }

TEST(BitString, TextRoundTrip) {
  EXPECT_EQ(BitString().ToText(), "^");
  EXPECT_EQ(B("^"), BitString());
  EXPECT_EQ(B("10110").ToText(), "10110");
  EXPECT_EQ(B("10110").size(), 5U);
  EXPECT_THROW(B("10a"), BitsError);
}

TEST(BitString, OrderIsShortlex) {
  EXPECT_LT(B("1"), B("00"));
  EXPECT_LT(B("010"), B("011"));
  EXPECT_LT(BitString(), B("0"));
}

TEST(BitString, CapIs64Bits) {
  BitString s = BitString::FromWord(~std::uint64_t{0}, 64);
  EXPECT_EQ(s.size(), 64U);
  EXPECT_THROW(s.Append(false), BitsError);
  BitString out;
  EXPECT_FALSE(s.TryAppend(true, out));
}

TEST(DropLast, Examples) {
  EXPECT_EQ(DropLast(B("10110"), 2), B("101"));
  EXPECT_EQ(DropLast(B("10110"), 0), B("10110"));
  EXPECT_EQ(DropLast(B("10110"), 5), BitString());
  try {
    DropLast(B("10"), 3);
    FAIL() << "expected underflow";
  } catch (const BitsError& e) {
    EXPECT_EQ(e.code(), BitsErrc::kUnderflow);
  }
}

TEST(PairCode, Examples) {
  EXPECT_EQ(PairEncode({}, {}), B("01"));
  EXPECT_EQ(PairEncode(B("1"), B("0")), B("11010"));
  EXPECT_EQ(PairDecode(B("01")), (PairCode{{}, {}}));
  EXPECT_EQ(PairDecode(B("11010")), (PairCode{B("1"), B("0")}));
}

TEST(PairCode, MalformedCodes) {
  for (const char* bad : {"^", "0", "1", "10", "11", "0011", "1100"}) {
    try {
      PairDecode(B(bad));
      ADD_FAILURE() << bad << " decoded";
    } catch (const BitsError& e) {
      EXPECT_EQ(e.code(), BitsErrc::kMalformedCode) << bad;
    }
  }
}

TEST(PairCode, CapExceeded) {
  const BitString a = BitString::FromWord(0, 31);
  EXPECT_EQ(PairEncode(a, {}).size(), 64U);
  try {
    PairEncode(a, B("1"));
    FAIL() << "expected cap error";
  } catch (const BitsError& e) {
    EXPECT_EQ(e.code(), BitsErrc::kCapExceeded);
  }
}

// Every pair with both parts of at most 6 bits: round trip and length law.
TEST(PairCode, ExhaustiveRoundTrip) {
  std::size_t n = 0;
  ForEachStringUpTo(6, [&](const BitString& a) {
    ForEachStringUpTo(6, [&](const BitString& b) {
      const BitString code = PairEncode(a, b);
      ASSERT_EQ(code.size(), PairCodeLength(a.size(), b.size()));
      ASSERT_EQ(PairDecode(code), (PairCode{a, b}));
      ++n;
    });
  });
  EXPECT_EQ(n, 127U * 127U);
}

TEST(PairCode, RandomRoundTrip) {
  std::mt19937_64 rng(20261015);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t la = rng() % 32;
    const std::size_t lb = rng() % (63 - 2 * la);
    const BitString a = BitString::FromWord(rng(), la);
    const BitString b = BitString::FromWord(rng(), lb);
    const BitString code = PairEncode(a, b);
    ASSERT_EQ(code.size(), 2 * la + 2 + lb);
    ASSERT_EQ(PairDecode(code), (PairCode{a, b}));
  }
}

// Flipping one bit of the first component flips exactly two adjacent code
// bits; dropping its last bit shortens the code by exactly two bits.
TEST(PairCode, Locality) {
  ForEachStringUpTo(6, [&](const BitString& a) {
    const BitString b = B("1011");
    const BitString code = PairEncode(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const BitString flipped =
          BitString::FromWord(a.word() ^ (std::uint64_t{1} << (a.size() - 1 - i)),
                              a.size());
      const BitString other = PairEncode(flipped, b);
      std::vector<std::size_t> diff;
      for (std::size_t k = 0; k < code.size(); ++k) {
        if (code[k] != other[k]) diff.push_back(k);
      }
      ASSERT_EQ(diff.size(), 2U);
      EXPECT_EQ(diff[0], 2 * i);
      EXPECT_EQ(diff[1], 2 * i + 1);
    }
    if (!a.empty()) {
      EXPECT_EQ(PairEncode(a.DropLast(1), b).size() + 2, code.size());
    }
  });
}

}  // namespace
}  // namespace aitl
