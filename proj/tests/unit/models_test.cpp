#include "bvmlab/models.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace bvmlab {
namespace {

Vector unit(Index d, Index j) {
  Vector e = Vector::Zero(d);
  e(j) = 1.0;
  return e;
}

double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max(d, std::max((i + 1) / n - xs[i], xs[i] - i / n));
  }
  return d;
}

TEST(CosineBasis, Values) {
  const CosineBasis b(3);
  const Vector v = b(0.0);
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(v(j), std::numbers::sqrt2, 1e-15);
  const Vector h = b(0.5);
  EXPECT_NEAR(h(0), 0.0, 1e-15);
  EXPECT_NEAR(h(1), -std::numbers::sqrt2, 1e-15);
}

TEST(LogDensity, PhiAtZero) {
  const LogDensityModel m(100, 6);
  const PhiDerivatives d = m.phi_derivatives(Vector::Zero(6));
  EXPECT_NEAR(d.value, 0.0, 1e-13);
  EXPECT_LT(d.gradient.norm(), 1e-12);
  EXPECT_LT((d.hessian - Matrix::Identity(6, 6)).norm(), 1e-10);
  EXPECT_LT((m.fisher(Vector::Zero(6)) - 100.0 * Matrix::Identity(6, 6)).norm(), 1e-8);
}

TEST(LogDensity, GradientMatchesFiniteDifference) {
  const LogDensityModel m(10, 4);
  const Vector theta = 0.5 * unit(4, 0);
  const Vector g = m.phi_derivatives(theta).gradient;
  constexpr double h = 1e-4;
  for (Index j = 0; j < 4; ++j) {
    const double fd = (m.phi(theta + h * unit(4, j)) - m.phi(theta - h * unit(4, j))) / (2 * h);
    EXPECT_NEAR(g(j), fd, 1e-6);
  }
}

TEST(LogDensity, PhiConvexAlongRandomLines) {
  const LogDensityModel m(1, 8);
  RandomSource rs(31, 0);
  for (int line = 0; line < 20; ++line) {
    const Vector a = 0.5 * rs.gaussian_vector(8);
    const Vector u = rs.gaussian_vector(8).normalized();
    for (double t = -1.0; t <= 1.0; t += 0.25) {
      constexpr double h = 1e-2;
      const double d2 = m.phi(a + (t + h) * u) - 2 * m.phi(a + t * u) + m.phi(a + (t - h) * u);
      EXPECT_GE(d2, -1e-9);
    }
  }
}

TEST(LogDensity, CentralMomentsOfFirstBasisFunction) {
  const LogDensityModel m(1, 4);
  const Eigen::Vector4d mom = m.central_moments(Vector::Zero(4), unit(4, 0));
  EXPECT_NEAR(mom[0], 1.0, 1e-12);
  EXPECT_NEAR(mom[2], 1.5, 1e-12);
  EXPECT_NEAR(mom[3], 0.0, 1e-12);
}

TEST(LogDensity, DirectionalDerivativesMatchFiniteDifferences) {
  const LogDensityModel m(50, 5);
  RandomSource rs(32, 0);
  const Vector theta = 0.3 * rs.gaussian_vector(5);
  const Vector u = rs.gaussian_vector(5).normalized();
  const Vector g = m.log_partition_gradient(theta);
  EXPECT_NEAR(m.log_partition_directional(theta, u, 1), g.dot(u), 1e-9);
  EXPECT_NEAR(m.log_partition_directional(theta, u, 2), u.dot(m.fisher(theta) * u), 1e-8);
  constexpr double h = 1e-3;
  auto d2 = [&](double t) { return m.log_partition_directional(theta + t * u, u, 2); };
  EXPECT_NEAR(m.log_partition_directional(theta, u, 3), (d2(h) - d2(-h)) / (2 * h), 1e-4 * 50);
  EXPECT_NEAR(m.log_partition_directional(theta, u, 4), (d2(h) - 2 * d2(0) + d2(-h)) / (h * h),
              1e-3 * 50);
}

TEST(LogDensity, BatchMatchesPointwise) {
  const LogDensityModel m(20, 3);
  RandomSource rs(33, 0);
  Matrix thetas(3, 5);
  rs.fill_normal(thetas);
  const Vector batch = m.log_partition_batch(thetas);
  for (Index c = 0; c < 5; ++c) EXPECT_NEAR(batch(c), m.log_partition(thetas.col(c)), 1e-10);
}

TEST(LogLik, ZeroParameter) {
  RandomSource rs(34, 0);
  const LogDensityModel ld(500, 4);
  const Dataset d = ld.sample(Vector::Zero(4), rs);
  EXPECT_NEAR(log_lik(ld, d, Vector::Zero(4)), 0.0, 1e-9);

  const GlmModel logistic(GlmLink::logistic, 500, 4);
  const Dataset y = logistic.sample(Vector::Zero(4), rs);
  EXPECT_NEAR(log_lik(logistic, y, Vector::Zero(4)), -500.0 * std::log(2.0), 1e-9);
}

TEST(LogLik, GradientMatchesFiniteDifferences) {
  RandomSource rs(35, 0);
  const Vector truth = sobolev_truth(6, 2.0);
  std::vector<std::unique_ptr<Model>> models;
  models.push_back(make_model(ModelKind::log_density, 300, 6));
  models.push_back(make_model(ModelKind::logistic, 300, 6));
  models.push_back(make_model(ModelKind::poisson, 300, 6));
  models.push_back(make_model(ModelKind::gaussian_surrogate, 300, 6));
  for (const auto& m : models) {
    const Vector t = m->statistic(m->sample(truth, rs));
    for (int k = 0; k < 5; ++k) {
      const Vector theta = 0.2 * rs.gaussian_vector(6);
      const Vector g = grad_log_lik(*m, t, theta);
      constexpr double h = 1e-5;
      for (Index j = 0; j < 6; ++j) {
        const double fd =
            (log_lik(*m, t, theta + h * unit(6, j)) - log_lik(*m, t, theta - h * unit(6, j))) /
            (2 * h);
        EXPECT_NEAR(g(j), fd, 1e-6 * std::max(1.0, std::abs(fd))) << m->name();
      }
    }
  }
}

TEST(GlmPhi, LogisticDerivativesAtZero) {
  EXPECT_NEAR(glm_phi_derivs(GlmLink::logistic, 0.0, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(glm_phi_derivs(GlmLink::logistic, 0.0, 1), 0.5, 1e-15);
  EXPECT_NEAR(glm_phi_derivs(GlmLink::logistic, 0.0, 2), 0.25, 1e-15);
  EXPECT_NEAR(glm_phi_derivs(GlmLink::logistic, 0.0, 3), 0.0, 1e-15);
  EXPECT_NEAR(glm_phi_derivs(GlmLink::logistic, 0.0, 4), -0.125, 1e-15);
}

TEST(GlmPhi, DerivativesMatchFiniteDifferences) {
  for (GlmLink link : {GlmLink::logistic, GlmLink::poisson}) {
    for (double v : {-3.0, -0.7, 0.4, 2.0, 35.0}) {
      if (link == GlmLink::poisson && v > 5.0) continue;
      for (int k = 1; k <= 4; ++k) {
        const double h = 1e-5;
        const double fd =
            (glm_phi_derivs(link, v + h, k - 1) - glm_phi_derivs(link, v - h, k - 1)) / (2 * h);
        EXPECT_NEAR(glm_phi_derivs(link, v, k), fd, 1e-7 * std::max(1.0, std::abs(fd)));
      }
    }
  }
  EXPECT_NEAR(glm_phi_derivs(GlmLink::poisson, 0.0, 2), 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(glm_phi_derivs(GlmLink::logistic, 800.0, 0)));
}

TEST(Fisher, GlmAtZero) {
  const GlmModel logistic(GlmLink::logistic, 200, 5);
  const Matrix gram = logistic.design().transpose() * logistic.design();
  EXPECT_LT((logistic.fisher(Vector::Zero(5)) - 0.25 * gram).norm(), 1e-10);
  const GlmModel poisson(GlmLink::poisson, 200, 5);
  EXPECT_LT((poisson.fisher(Vector::Zero(5)) - gram).norm(), 1e-10);
}

TEST(Fisher, PositiveDefiniteAtRandomPoints) {
  RandomSource rs(36, 0);
  const GlmModel logistic(GlmLink::logistic, 200, 8);
  const LogDensityModel ld(200, 8);
  for (int k = 0; k < 10; ++k) {
    const Vector theta = rs.gaussian_vector(8);
    EXPECT_GT(sorted_spectrum(logistic.fisher(theta)).minCoeff(), 0.0);
    EXPECT_GT(sorted_spectrum(ld.fisher(theta)).minCoeff(), 0.0);
  }
}

TEST(Sampling, LogDensityUniformKs) {
  RandomSource rs(37, 0);
  const LogDensityModel m(100000, 4);
  const Dataset d = m.sample(Vector::Zero(4), rs);
  ASSERT_EQ(d.observations.size(), 100000u);
  EXPECT_LT(ks_uniform(d.observations), 0.006);
}

TEST(Sampling, GlmMeansAtZero) {
  RandomSource rs(38, 0);
  const GlmModel logistic(GlmLink::logistic, 100000, 4);
  const Dataset y = logistic.sample(Vector::Zero(4), rs);
  double mean = 0.0;
  for (double v : y.observations) mean += v;
  EXPECT_NEAR(mean / 1e5, 0.5, 0.005);

  const GlmModel poisson(GlmLink::poisson, 100000, 4);
  const Dataset c = poisson.sample(Vector::Zero(4), rs);
  mean = 0.0;
  for (double v : c.observations) mean += v;
  EXPECT_NEAR(mean / 1e5, 1.0, 0.01);
}

TEST(Sampling, LogDensityBasisMeanMatchesGradient) {
  RandomSource rs(39, 0);
  const LogDensityModel m(100000, 3);
  for (int k = 0; k < 3; ++k) {
    const Vector theta = 0.5 * rs.gaussian_vector(3);
    const Dataset d = m.sample(theta, rs);
    const Vector mean = m.statistic(d) / 1e5;
    const PhiDerivatives pd = m.phi_derivatives(theta);
    for (Index j = 0; j < 3; ++j) {
      const double sd = std::sqrt(pd.hessian(j, j) / 1e5);
      EXPECT_NEAR(mean(j), pd.gradient(j), 4 * sd);
    }
  }
}

TEST(Sampling, InverseCdfQuantileIsMonotone) {
  const InverseCdfSampler s(Eigen::Vector2d(1.0, -0.5));
  double prev = 0.0;
  for (double u = 0.01; u < 1.0; u += 0.01) {
    const double q = s.quantile(u);
    EXPECT_GE(q, prev);
    prev = q;
  }
  const InverseCdfSampler flat(Vector::Zero(2));
  EXPECT_NEAR(flat.quantile(0.3), 0.3, 1e-6);
}

TEST(Models, GlmStochasticPartIsLinear) {
  RandomSource rs(40, 0);
  const GlmModel m(GlmLink::logistic, 300, 5);
  const Vector truth = sobolev_truth(5, 2.0);
  const Vector t1 = m.statistic(m.sample(truth, rs));
  const Vector t2 = m.statistic(m.sample(truth, rs));
  const Vector a = rs.gaussian_vector(5);
  const Vector b = rs.gaussian_vector(5);
  const Vector dd = (grad_log_lik(m, t1, a) - grad_log_lik(m, t1, b)) -
                    (grad_log_lik(m, t2, a) - grad_log_lik(m, t2, b));
  EXPECT_LT(dd.norm(), 1e-10);
}

TEST(Models, ExpectedStatisticAndScoreCovariance) {
  const Vector truth = sobolev_truth(12, 2.0);
  const LogDensityModel ld(1000, 6);
  const LogDensityModel full(1000, 12);
  const Vector et = ld.expected_statistic(truth);
  EXPECT_LT((et - 1000.0 * full.phi_derivatives(truth).gradient.head(6)).norm(), 1e-8);

  const GlmModel g(GlmLink::logistic, 400, 4);
  const Vector v = g.truth_index(truth);
  Matrix expected = Matrix::Zero(4, 4);
  for (Index i = 0; i < 400; ++i) {
    const Vector psi = g.design().row(i).transpose();
    expected += glm_phi_derivs(GlmLink::logistic, v(i), 2) * psi * psi.transpose();
  }
  EXPECT_LT((g.score_covariance(truth) - expected).norm(), 1e-9);
}

TEST(Models, SobolevTruthNormalization) {
  const Vector t = sobolev_truth(64, 2.0, 0.9);
  double s = 0.0;
  for (Index j = 0; j < 64; ++j) s += std::pow(j + 1.0, 4.0) * t(j) * t(j);
  EXPECT_NEAR(s, 0.9, 1e-12);
  EXPECT_GT(t(0), 0.0);
  EXPECT_LT(t(1), 0.0);
  EXPECT_EQ(leading(t, 70).size(), 70);
  EXPECT_EQ(leading(t, 70)(69), 0.0);
  EXPECT_EQ(leading(t, 3), t.head(3));
}

TEST(Audit, LogDensityAtZero) {
  const LogDensityModel m(100, 4);
  const AuditReport r = audit_conditions(m, {Vector::Zero(4)}, {unit(4, 0), unit(4, 1)});
  EXPECT_NEAR(r.c_phi1, 1.0, 1e-9);
  EXPECT_NEAR(r.c_phi2, 1.0, 1e-9);
  EXPECT_GE(r.c_f * r.c_f, std::sqrt(1.5) - 1e-12);
  EXPECT_TRUE(r.passed);
}

TEST(Audit, LogisticFisherConstantMatchesEigenvalue) {
  const GlmModel m(GlmLink::logistic, 500, 6);
  const AuditReport r = audit_conditions(m, Vector::Zero(6), {unit(6, 0)});
  const Matrix gram = m.design().transpose() * m.design() / 500.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  // F(0) / n = phi''(0) Psi^T Psi / n with phi''(0) = 1/4.
  EXPECT_NEAR(r.c_fisher_inv_sq, 0.25 * es.eigenvalues().minCoeff(), 1e-10);
  EXPECT_NEAR(r.c_phi1, 1.0, 1e-15);
  EXPECT_NEAR(r.c_phi2, 1.0, 1e-15);
}

}  // namespace
}  // namespace bvmlab
