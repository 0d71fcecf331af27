#include "bvmlab/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace bvmlab {
namespace {

TEST(RandomSource, SameSeedAndStreamIsDeterministic) {
  RandomSource a(42, 3);
  RandomSource b(42, 3);
  const Vector va = a.gaussian_vector(17);
  const Vector vb = b.gaussian_vector(17);
  EXPECT_EQ(va, vb);
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RandomSource, StreamsAndSubstreamsDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t s = 0; s < 64; ++s) {
    RandomSource rs(7, s);
    first.insert(rs.next_u64());
  }
  EXPECT_EQ(first.size(), 64u);

  const RandomSource base(7, 0);
  RandomSource c1 = base.substream(1);
  RandomSource c2 = base.substream(2);
  RandomSource c1b = base.substream(1);
  const std::uint64_t x1 = c1.next_u64();
  EXPECT_NE(x1, c2.next_u64());
  EXPECT_EQ(x1, c1b.next_u64());
}

TEST(RandomSource, UniformInOpenInterval) {
  RandomSource rs(1, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = rs.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(GaussianVector, MeanAndVarianceBands) {
  constexpr int kDraws = 1000000;
  RandomSource rs(2024, 0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double x = gaussian_vector(rs, 1)(0);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / kDraws;
  const double var = sum_sq / kDraws - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4e-3);
  EXPECT_NEAR(var, 1.0, 6e-3);
}

TEST(RandomSource, DiscreteDrawMeans) {
  RandomSource rs(5, 1);
  constexpr int kDraws = 200000;
  double pois = 0.0;
  double bern = 0.0;
  double rad = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    pois += static_cast<double>(rs.poisson(2.5));
    bern += rs.bernoulli(0.3) ? 1.0 : 0.0;
    rad += rs.rademacher();
  }
  EXPECT_NEAR(pois / kDraws, 2.5, 4.0 * std::sqrt(2.5 / kDraws));
  EXPECT_NEAR(bern / kDraws, 0.3, 4.0 * std::sqrt(0.21 / kDraws));
  EXPECT_NEAR(rad / kDraws, 0.0, 4.0 / std::sqrt(kDraws));
}

TEST(RandomSource, LargePoissonMean) {
  RandomSource rs(6, 1);
  constexpr int kDraws = 20000;
  double sum = 0.0;
  for (int i = 0; i < kDraws; ++i) sum += static_cast<double>(rs.poisson(400.0));
  EXPECT_NEAR(sum / kDraws, 400.0, 4.0 * std::sqrt(400.0 / kDraws));
}

TEST(RandomSource, FillNormalMatchesSequentialDraws) {
  RandomSource a(9, 9);
  RandomSource b(9, 9);
  Matrix m(3, 4);
  a.fill_normal(m);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) EXPECT_EQ(m(r, c), b.normal());
}

}  // namespace
}  // namespace bvmlab
