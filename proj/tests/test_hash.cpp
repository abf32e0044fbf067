#include <gtest/gtest.h>

#include "vatkg/hash.hpp"

using namespace vatkg;

TEST(Fnv1a64, PublishedVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Fnv1a64, IncrementalMatchesOneShot) {
  Fnv1a64 h;
  h.update("foo");
  const unsigned char bar[] = {'b', 'a', 'r'};
  h.update(std::span<const unsigned char>(bar));
  EXPECT_EQ(h.digest(), fnv1a64("foobar"));
}

TEST(SplitMix64, ReferenceSequenceFromZero) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
}

TEST(ToHex16, ZeroPaddedLowercase) {
  EXPECT_EQ(to_hex16(0), "0000000000000000");
  EXPECT_EQ(to_hex16(0xABCULL), "0000000000000abc");
  EXPECT_EQ(to_hex16(~0ULL), "ffffffffffffffff");
}
