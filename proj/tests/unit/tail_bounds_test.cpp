#include "bvmlab/errors.hpp"
#include "bvmlab/tail_bounds.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <cmath>

namespace bvmlab {
namespace {

double chi2_upper(double p, double t) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(p), t));
}

TEST(ZQuantile, Examples) {
  const TailSpec i5 = TailSpec::identity(5);
  EXPECT_DOUBLE_EQ(i5.p, 5.0);
  EXPECT_DOUBLE_EQ(i5.v2, 5.0);
  EXPECT_DOUBLE_EQ(i5.lambda, 1.0);
  EXPECT_NEAR(z_quantile(i5, 0.0), std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(z_quantile(i5, 2.0), std::sqrt(9.0 + 2.0 * std::sqrt(10.0)), 1e-14);
  EXPECT_NEAR(z_quantile(i5, 2.0), 3.91466, 1e-5);
  for (Index p : {1, 3, 17}) {
    for (double x : {0.1, 1.0, 4.0}) {
      const double pd = static_cast<double>(p);
      EXPECT_NEAR(z_quantile(TailSpec::identity(p), x),
                  std::sqrt(pd + 2.0 * std::sqrt(pd * x) + 2.0 * x), 1e-13);
    }
  }
}

TEST(ZQuantile, FromOperatorAndSpectrum) {
  Matrix w = Eigen::Vector3d(4.0, 1.0, 0.25).asDiagonal();
  const TailSpec a = TailSpec::from_operator(w);
  const TailSpec b = TailSpec::from_spectrum(Eigen::Vector3d(0.25, 4.0, 1.0));
  EXPECT_NEAR(a.p, 5.25, 1e-14);
  EXPECT_NEAR(a.v2, 16.0 + 1.0 + 0.0625, 1e-14);
  EXPECT_NEAR(a.lambda, 4.0, 1e-14);
  EXPECT_NEAR(b.p, a.p, 1e-14);
  EXPECT_NEAR(b.lambda, a.lambda, 1e-14);
  const TailSpec n = a.normalized();
  EXPECT_NEAR(n.lambda, 1.0, 1e-15);
  EXPECT_NEAR(z_quantile(a, 1.5), 2.0 * z_quantile(n, 1.5), 1e-12);
}

TEST(ZQuantile, StrictlyIncreasingInEachArgument) {
  const TailSpec base{6.0, 4.0, 1.5};
  const double z0 = z_quantile(base, 1.0);
  EXPECT_GT(z_quantile(base, 1.1), z0);
  EXPECT_GT(z_quantile({6.1, 4.0, 1.5}, 1.0), z0);
  EXPECT_GT(z_quantile({6.0, 4.1, 1.5}, 1.0), z0);
  EXPECT_GT(z_quantile({6.0, 4.0, 1.6}, 1.0), z0);
}

TEST(ZSimplified, Examples) {
  EXPECT_NEAR(z_simplified(5.0, 1.0, 0.0), std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(z_simplified(5.0, 1.0, 2.0), std::sqrt(5.0) + 2.0, 1e-15);
  EXPECT_NEAR(z_simplified(5.0, 0.0, 7.0), std::sqrt(5.0), 1e-15);
}

TEST(ZSimplified, DominatesQuantileOnGrid) {
  RandomSource rs(81, 0);
  for (int i = 0; i < 100; ++i) {
    Vector ev(8);
    for (Index j = 0; j < 8; ++j) ev(j) = rs.uniform() * 3.0;
    const TailSpec ts = TailSpec::from_spectrum(ev);
    const double x = 0.05 * (i + 1);
    EXPECT_GE(z_simplified(ts.p, ts.lambda, x), z_quantile(ts, x) - 1e-12);
  }
}

TEST(ExpTail, IdentityFourCrossing) {
  const ExpTailSpec e = solve_exp_tail(TailSpec::identity(4), 20.0);
  EXPECT_LT(e.residual, 1e-10);
  const double mu = 1.0 / (1.0 + 1.0 / std::sqrt(e.x_c));
  EXPECT_NEAR(e.mu_c, mu, 1e-12);
  EXPECT_NEAR((20.0 - 2.0 * std::sqrt(mu)) / mu,
              std::sqrt(4.0 + 4.0 * std::sqrt(e.x_c) + 2.0 * e.x_c) + 1.0, 1e-8);
}

TEST(ExpTail, BranchesAndJump) {
  const TailSpec base = TailSpec::from_spectrum(Eigen::Vector4d(1.0, 0.8, 0.3, 0.1));
  const ExpTailSpec e = solve_exp_tail(base, 10.0);
  for (double f : {0.1, 0.5, 0.999}) {
    EXPECT_DOUBLE_EQ(exp_tail_quantile(e, f * e.x_c), z_quantile(e.base, f * e.x_c));
  }
  const double left = exp_tail_quantile(e, e.x_c);
  const double right = exp_tail_quantile(e, std::nextafter(e.x_c, 1e300));
  EXPECT_NEAR(right - left, 1.0, 1e-6);
  double prev = exp_tail_quantile(e, e.x_c * 1.0001);
  for (double x = e.x_c * 1.01; x < e.x_c * 5.0; x *= 1.1) {
    const double q = exp_tail_quantile(e, x);
    EXPECT_GE(q, prev);
    prev = q;
  }
}

TEST(ExpTail, LargeGPushesCrossingOut) {
  EXPECT_GT(solve_exp_tail(TailSpec::identity(4), 1e6).x_c, 1e4);
}

TEST(ExpTail, SmallGHasNoCrossing) {
  EXPECT_THROW(solve_exp_tail(TailSpec::identity(4), 0.5), NoCrossing);
}

TEST(ExpTail, MuFormula) {
  const TailSpec b = TailSpec::identity(9);
  EXPECT_NEAR(exp_tail_mu(b, 4.0), 1.0 / (1.0 + 3.0 / 4.0), 1e-15);
}

TEST(McTail, OneDimensionalMatchesChiSquare) {
  RandomSource rs(82, 0);
  const std::size_t n = 1000000;
  const TailCheck t = mc_tail_validate(Matrix::Identity(1, 1), 2.0, n, rs);
  const double z = z_quantile(TailSpec::identity(1), 2.0);
  const double exact = chi2_upper(1.0, z * z);
  EXPECT_NEAR(t.empirical, exact, 3.0 * std::sqrt(exact * (1 - exact) / n));
  EXPECT_LE(exact, std::exp(-2.0));
  EXPECT_TRUE(t.passed);
}

TEST(McTail, IdentityFiveAllPass) {
  RandomSource rs(83, 0);
  const auto checks = mc_tail_validate(Matrix::Identity(5, 5), {0.5, 1.0, 2.0, 3.0}, 1000000, rs);
  ASSERT_EQ(checks.size(), 4u);
  for (const auto& c : checks) {
    EXPECT_TRUE(c.passed) << c.empirical << " vs " << c.bound;
    EXPECT_NEAR(c.tolerance, c.bound + 3.0 * std::sqrt(c.bound / 1e6), 1e-15);
  }
}

TEST(McTail, RademacherIdentityTen) {
  RandomSource rs(84, 0);
  EXPECT_TRUE(mc_tail_validate(Matrix::Identity(10, 10), 2.0, 200000, rs, NoiseFamily::rademacher)
                  .passed);
}

TEST(McTail, SharedDrawsAcrossLevels) {
  RandomSource a(85, 0);
  RandomSource b(85, 0);
  const Matrix w = Eigen::Vector3d(2.0, 1.0, 0.5).asDiagonal();
  const auto many = mc_tail_validate(w, {1.0, 2.0}, 20000, a);
  const TailCheck one = mc_tail_validate(w, 1.0, 20000, b);
  EXPECT_EQ(many[0].empirical, one.empirical);
  EXPECT_GE(many[0].empirical, many[1].empirical);
}

TEST(ChiSquare, Examples) {
  const ChiSquareCheck zero = chi_square_bounds_check(5.0, 0.0);
  EXPECT_TRUE(zero.passed);
  EXPECT_LT(zero.lower_square, 1.0);
  EXPECT_TRUE(chi_square_bounds_check(20.0, 3.0).passed);
  EXPECT_TRUE(chi_square_bounds_check(1.0, 5.0).passed);
}

TEST(ChiSquare, MatchesOracle) {
  const double p = 20.0;
  const double x = 3.0;
  const ChiSquareCheck c = chi_square_bounds_check(p, x);
  EXPECT_NEAR(c.upper_square, chi2_upper(p, p + 2 * std::sqrt(p * x) + 2 * x), 1e-12);
  const double r = std::sqrt(p) + std::sqrt(2 * x);
  EXPECT_NEAR(c.upper_norm, chi2_upper(p, r * r), 1e-12);
  EXPECT_NEAR(c.bound, std::exp(-x), 1e-15);
  EXPECT_NEAR(chi_square_upper_tail(3.0, 2.5), chi2_upper(3.0, 2.5), 1e-14);
}

}  // namespace
}  // namespace bvmlab
