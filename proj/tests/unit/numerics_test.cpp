#include "bvmlab/errors.hpp"
#include "bvmlab/numerics.hpp"
#include "bvmlab/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace bvmlab {
namespace {

Matrix random_spd(RandomSource& rs, Index d) {
  Matrix b(d, d);
  rs.fill_normal(b);
  return b * b.transpose() + 0.5 * Matrix::Identity(d, d);
}

TEST(SpdFactor, IdentityGivesIdentityFactor) {
  const SpdFactor f = spd_factor(Matrix::Identity(3, 3));
  EXPECT_TRUE(f.lower().isApprox(Matrix::Identity(3, 3)));
}

TEST(SpdFactor, TwoByTwoCholesky) {
  Matrix m(2, 2);
  m << 4, 2, 2, 3;
  const SpdFactor f = spd_factor(m);
  Matrix expected(2, 2);
  expected << 2, 0, 1, std::sqrt(2.0);
  EXPECT_LT((f.lower() - expected).norm(), 1e-14);
  EXPECT_NEAR(f.log_det(), std::log(8.0), 1e-14);
}

TEST(SpdFactor, IndefiniteThrows) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  EXPECT_THROW(spd_factor(m), NotPositiveDefinite);
}

TEST(SpdFactor, AsymmetricAndNonSquareThrow) {
  Matrix m(2, 2);
  m << 2, 1, 0, 2;
  EXPECT_THROW(spd_factor(m), NotSymmetric);
  EXPECT_THROW(spd_factor(Matrix::Ones(2, 3)), DimensionMismatch);
}

TEST(SpdFactor, SolveReproducesRightHandSide) {
  RandomSource rs(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 1 + trial % 12;
    const Matrix m = random_spd(rs, d);
    const Vector b = rs.gaussian_vector(d);
    const SpdFactor f = spd_factor(m);
    const Vector x = f.solve(b);
    EXPECT_LT((m * x - b).norm(), 1e-8 * b.norm());
    EXPECT_NEAR(f.apply_transpose(x).squaredNorm(), x.dot(m * x), 1e-9 * x.dot(m * x));
    const Vector w = f.inverse_transpose(b);
    EXPECT_LT((f.lower().transpose() * w - b).norm(), 1e-9 * b.norm());
    EXPECT_LT((f.lower() * f.whiten(b) - b).norm(), 1e-9 * b.norm());
    EXPECT_LT((f.inverse() * m - Matrix::Identity(d, d)).norm(), 1e-8);
  }
}

TEST(TraceSolve, Examples) {
  EXPECT_NEAR(trace_solve(Matrix::Identity(5, 5), Matrix::Identity(5, 5)), 5.0, 1e-14);
  const Matrix a = Eigen::Vector2d(2, 4).asDiagonal();
  EXPECT_NEAR(trace_solve(a, Matrix::Identity(2, 2)), 0.75, 1e-15);
}

TEST(TraceSolve, MatchesExplicitInverse) {
  RandomSource rs(12, 0);
  const Matrix a = random_spd(rs, 6);
  const Matrix b = random_spd(rs, 6);
  EXPECT_NEAR(trace_solve(a, b), (a.inverse() * b).trace(), 1e-9);
}

TEST(TraceSolve, EqualsEigenvalueSumOfRandomPairs) {
  RandomSource rs(13, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 1 + (trial * 5) % 12;
    const Matrix a = random_spd(rs, d);
    const Matrix b = random_spd(rs, d);
    const double oracle = (a.inverse() * b).eigenvalues().real().sum();
    EXPECT_NEAR(trace_solve(a, b), oracle, 1e-8 * std::abs(oracle));
  }
}

TEST(Spectrum, SortedAndNorm) {
  Matrix m = Eigen::Vector3d(1, -5, 3).asDiagonal();
  const Vector s = sorted_spectrum(m);
  EXPECT_DOUBLE_EQ(s(0), 3);
  EXPECT_DOUBLE_EQ(s(1), 1);
  EXPECT_DOUBLE_EQ(s(2), -5);
  EXPECT_DOUBLE_EQ(symmetric_norm(m), 5);
}

TEST(Spectrum, SymmetricSqrtSquaresBack) {
  RandomSource rs(14, 0);
  const Matrix m = random_spd(rs, 7);
  const Matrix r = symmetric_sqrt(m);
  EXPECT_LT((r * r - m).norm(), 1e-10 * m.norm());
  EXPECT_TRUE(is_symmetric(r, 1e-10));
}

TEST(Spectrum, RelativeSpectrumMatchesGeneralizedEigenproblem) {
  RandomSource rs(15, 0);
  const Matrix a = random_spd(rs, 5);
  const Matrix m = random_spd(rs, 5);
  const Vector rel = relative_spectrum(a, spd_factor(m));
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, m);
  Vector oracle = es.eigenvalues().reverse();
  EXPECT_LT((rel - oracle).norm(), 1e-9 * oracle.norm());
}

TEST(Dimensions, MismatchThrows) {
  EXPECT_NO_THROW(require_same_dim(3, 3, "x"));
  EXPECT_THROW(require_same_dim(3, 4, "x"), DimensionMismatch);
}

}  // namespace
}  // namespace bvmlab
