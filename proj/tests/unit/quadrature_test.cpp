#include "bvmlab/errors.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace bvmlab {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Quadrature, Examples) {
  EXPECT_NEAR(integrate_unit_interval([](double) { return 1.0; }), 1.0, 1e-12);
  EXPECT_NEAR(integrate_unit_interval([](double x) {
                const double c = std::cos(kPi * x);
                return 2.0 * c * c;
              }),
              1.0, 1e-12);
  EXPECT_NEAR(integrate_unit_interval([](double x) {
                const double c = std::sqrt(2.0) * std::cos(kPi * x);
                return c * c * c;
              }),
              0.0, 1e-12);
}

TEST(Quadrature, NodesAndWeightsOnUnitInterval) {
  const UnitQuadrature q(256);
  EXPECT_EQ(q.size(), 256u);
  EXPECT_NEAR(q.weights().sum(), 1.0, 1e-12);
  EXPECT_GT(q.nodes().minCoeff(), 0.0);
  EXPECT_LT(q.nodes().maxCoeff(), 1.0);
}

TEST(Quadrature, GaussLegendreExactForPolynomials) {
  Vector x;
  Vector w;
  gauss_legendre(16, x, w);
  for (int k = 0; k <= 31; ++k) {
    const double exact = (k % 2 == 1) ? 0.0 : 2.0 / (k + 1);
    EXPECT_NEAR((w.array() * x.array().pow(k)).sum(), exact, 1e-13) << "degree " << k;
  }
}

TEST(Quadrature, CosineBasisIsOrthonormal) {
  const CosineBasis basis(64);
  const UnitQuadrature q;
  const Matrix b = basis.design(q.nodes());
  const Matrix gram = b.transpose() * q.weights().asDiagonal() * b;
  EXPECT_LT((gram - Matrix::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Quadrature, NonFiniteIntegrandThrows) {
  EXPECT_THROW(integrate_unit_interval(
                   [](double x) { return x < 0.5 ? 1.0 : std::numeric_limits<double>::quiet_NaN(); }),
               NonFiniteIntegrand);
}

}  // namespace
}  // namespace bvmlab
