#include "cfprop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include <gtest/gtest.h>

using namespace cfprop;

TEST(RngTest, SameSeedSameStreamBitwise) {
  Rng a(1234567), b(1234567);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngTest, SameSeedSameDoublesBitwise) {
  Rng a(42), b(42);
  for (int i = 0; i < 10000; ++i) {
    const double x = a.normal();
    const double y = b.normal();
    ASSERT_EQ(std::memcmp(&x, &y, sizeof(double)), 0);
  }
}

TEST(RngTest, DerivedStreamsDiffer) {
  Rng root(99);
  Rng a = root.derive(1);
  Rng b = root.derive(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
  // Derivation is a pure function of (seed, stream id).
  Rng a2 = Rng(99).derive(1);
  for (int i = 0; i < 100; ++i) a2.next_u64();
  EXPECT_EQ(Rng(99).derive(1).seed(), a.seed());
}

TEST(RngTest, UniformRange) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-1.0, 1.0);
    EXPECT_GE(u, -1.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(RngTest, NormalMomentsRoughly) {
  Rng rng(6);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sumsq / n, 1.0, 0.02);
}

TEST(RngTest, BernoulliFrequency) {
  Rng rng(7);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3);
  EXPECT_NEAR(hits / static_cast<double>(n), 0.3, 0.01);
}

TEST(RngTest, BelowIsInRangeAndCoversAll) {
  Rng rng(8);
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(rng.below(7));
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(*seen.rbegin(), 6u);
}

TEST(RngTest, SampleWithoutReplacementDistinct) {
  Rng rng(9);
  const auto picks = rng.sample_without_replacement(50, 20);
  EXPECT_EQ(picks.size(), 20u);
  std::set<std::size_t> uniq(picks.begin(), picks.end());
  EXPECT_EQ(uniq.size(), 20u);
  for (std::size_t p : picks) EXPECT_LT(p, 50u);
}

TEST(RngTest, ShuffleIsPermutation) {
  Rng rng(10);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  auto sorted = v;
  rng.shuffle(v);
  std::vector<int> back = v;
  std::sort(back.begin(), back.end());
  EXPECT_EQ(back, sorted);
}
