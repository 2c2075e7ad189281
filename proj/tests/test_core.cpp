#include "ef21/core.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace ef21;

TEST(Streams, SameKeyReplaysSameSequence) {
  Rng a = make_stream(7, 3, 11);
  Rng b = make_stream(7, 3, 11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Streams, DistinctKeysGiveDistinctSeeds) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t w = 0; w < 20; ++w) {
    for (std::uint64_t r = 0; r < 50; ++r) {
      seeds.insert(stream_seed(5, w, r, StreamPurpose::Compression));
      seeds.insert(stream_seed(5, w, r, StreamPurpose::Sampling));
    }
  }
  EXPECT_EQ(seeds.size(), 20u * 50u * 2u);
  // the combinations a plain XOR would merge
  EXPECT_NE(stream_seed(0, 1, 0), stream_seed(0, 0, 1));
  EXPECT_NE(stream_seed(1, 0, 0), stream_seed(0, 1, 0));
}

TEST(Streams, Uniform01InUnitInterval) {
  Rng rng = make_stream(1, 0, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // sd of the mean is sqrt(1/12 / n)
  EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Streams, NormalMomentsMatch) {
  Rng rng = make_stream(2, 0, 0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(rng);
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Streams, UniformIndexCoversRangeEvenly) {
  Rng rng = make_stream(3, 0, 0);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[uniform_index(rng, 7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 4.0 * std::sqrt(n / 7.0));
}

TEST(RandomSubset, DistinctAndInRange) {
  Rng rng = make_stream(4, 0, 0);
  for (int rep = 0; rep < 100; ++rep) {
    auto s = random_subset(rng, 10, 4);
    ASSERT_EQ(s.size(), 4u);
    std::set<std::size_t> uniq(s.begin(), s.end());
    EXPECT_EQ(uniq.size(), 4u);
    for (auto i : s) EXPECT_LT(i, 10u);
  }
}

TEST(RandomSubset, InclusionProbabilityIsKOverN) {
  Rng rng = make_stream(5, 0, 0);
  const int reps = 50000;
  std::vector<int> hits(6, 0);
  for (int r = 0; r < reps; ++r) {
    for (auto i : random_subset(rng, 6, 2)) ++hits[i];
  }
  const double p = 2.0 / 6.0;
  for (int h : hits) EXPECT_NEAR(h, reps * p, 4.0 * std::sqrt(reps * p * (1 - p)));
}

TEST(OrderedSum, AddsInIndexOrder) {
  std::vector<Vector> parts{Vector::Constant(2, 1e16), Vector::Constant(2, 1.0), Vector::Constant(2, -1e16)};
  // left-to-right: (1e16 + 1) - 1e16 == 0 in double precision
  EXPECT_EQ(ordered_sum(parts)[0], 0.0);
  EXPECT_EQ(ordered_mean({Vector::Constant(1, 2.0), Vector::Constant(1, 4.0)})[0], 3.0);
}
