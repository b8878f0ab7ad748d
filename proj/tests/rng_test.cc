#include "synbd/rng.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <numeric>

namespace synbd {
namespace {

// Computed with an independent MT19937-64 transcription of the reference
// algorithm; also listed in docs/rng.md.
constexpr std::array<std::uint64_t, 10> kSeed42 = {
    13930160852258120406ULL, 11788048577503494824ULL, 13874630024467741450ULL,
    2513787319205155662ULL,  16662371453428439381ULL, 1735254072534978428ULL,
    10598951352238613536ULL, 6878563960102566144ULL,  5052085463162682550ULL,
    7199227068870524257ULL};

TEST(Rng, ReferenceTraceSeed42) {
  Rng rng(42);
  for (std::uint64_t expected : kSeed42) EXPECT_EQ(rng.next(), expected);
}

TEST(Rng, TenThousandthOutputOfDefaultSeed) {
  Rng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Rng, Uniform01UsesTop53Bits) {
  Rng rng(42);
  for (int i = 0; i < 3; ++i) {
    const double expected = static_cast<double>(kSeed42[i] >> 11) * 0x1.0p-53;
    EXPECT_EQ(rng.uniform01(), expected);
  }
}

TEST(Rng, UniformBelowIsRejectionSampledModulo) {
  // For n = 2^63 + 1, 2^64 mod n = 2^63 - 1, so the acceptance limit is n
  // itself: draws >= n are rejected and survivors are returned as is.
  const std::uint64_t n = (1ULL << 63) + 1;
  Rng rng(42);
  std::vector<std::uint64_t> expected;
  for (std::uint64_t x : kSeed42) {
    if (x < n) expected.push_back(x % n);
  }
  ASSERT_GE(expected.size(), 3u);
  for (std::uint64_t e : expected) EXPECT_EQ(rng.uniform_below(n), e);
}

TEST(Rng, UniformBelowSmallN) {
  Rng rng(42);
  for (std::uint64_t x : kSeed42) EXPECT_EQ(rng.uniform_below(6), x % 6);
}

TEST(Rng, PermutationIsFisherYates) {
  Rng a(7);
  Rng b(7);
  const auto p = a.permutation(20);
  std::vector<std::size_t> q(20);
  std::iota(q.begin(), q.end(), 0);
  for (std::size_t i = q.size() - 1; i > 0; --i) std::swap(q[i], q[b.uniform_below(i + 1)]);
  EXPECT_EQ(p, q);
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TEST(DeriveSeed, KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(derive_seed(42, "train"), 16544473972205524015ULL);
  EXPECT_EQ(derive_seed(42, std::uint64_t{3}), mix(42 ^ mix(3)));
  EXPECT_NE(derive_seed(42, "train"), derive_seed(42, "test"));
  EXPECT_NE(derive_seed(42, "train"), derive_seed(43, "train"));
}

}  // namespace
}  // namespace synbd
