#include "bvmlab/errors.hpp"
#include "bvmlab/posterior.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace bvmlab {
namespace {

// Gaussian sequence model: the Laplace law is the exact posterior.
struct SurrogateSetup {
  GaussianSurrogateModel model;
  Vector truth;
  Vector g2;
  Vector stat;
  FitResult fit;

  SurrogateSetup(std::size_t n, Index d, double w, std::uint64_t seed)
      : model(n, d), truth(sobolev_truth(d, 2.0)) {
    g2 = w > 0.0 ? PriorSpec::smooth(1.0, w).precision_diagonal(d) : Vector::Zero(d);
    RandomSource rs(seed, 0);
    stat = model.statistic(model.sample(truth, rs));
    fit = fit_pmle(model, stat, g2, Vector::Zero(d));
  }
  Vector post_mean() const {
    const double n = static_cast<double>(model.sample_size());
    return (n * Vector::Ones(g2.size()) + g2).cwiseInverse().cwiseProduct(stat);
  }
  Matrix post_cov() const {
    const double n = static_cast<double>(model.sample_size());
    return (n * Vector::Ones(g2.size()) + g2).cwiseInverse().asDiagonal();
  }
};

McmcConfig short_chain(Index keep) {
  McmcConfig c;
  c.keep = keep;
  c.burn_in = keep / 10;
  return c;
}

TEST(Laplace, SurrogateEqualsPosterior) {
  const SurrogateSetup s(400, 5, 2.0, 101);
  const LaplaceApprox la = laplace(s.fit);
  EXPECT_LT((la.center - s.post_mean()).norm(), 1e-10);
  EXPECT_LT((la.factor.inverse() - s.post_cov()).norm(), 1e-12);
  const double expected = -0.5 * 5 * std::log(2.0 * std::numbers::pi) + 0.5 * la.factor.log_det();
  EXPECT_NEAR(la.log_density(la.center), expected, 1e-10);
}

TEST(Laplace, DrawCovarianceWithinWishartBands) {
  RandomSource rs(102, 0);
  const LogDensityModel m(500, 3);
  const Vector t = m.statistic(m.sample(sobolev_truth(3, 2.0), rs));
  const FitResult fit = fit_pmle(m, t, Vector::Zero(3), Vector::Zero(3));
  const LaplaceApprox la = laplace(fit);
  constexpr Index kDraws = 100000;
  Matrix x(3, kDraws);
  for (Index i = 0; i < kDraws; ++i) x.col(i) = la.sample(rs);
  const Vector mean = x.rowwise().mean();
  const Matrix centered = x.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / (kDraws - 1.0);
  const Matrix sigma = la.factor.inverse();
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) {
      const double sd = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / kDraws);
      EXPECT_NEAR(cov(i, j), sigma(i, j), 4.0 * sd);
    }
  }
}

TEST(GaussianBlock, AntitheticPairs) {
  const GaussianBlock b = GaussianBlock::generate(10, 3, RandomSource(103, 0));
  EXPECT_TRUE(b.antithetic());
  for (Index k = 0; k < 5; ++k) EXPECT_EQ(b.draws().col(2 * k + 1), -b.draws().col(2 * k));
  const GaussianBlock c = GaussianBlock::generate(10, 3, RandomSource(103, 0));
  EXPECT_EQ(b.draws(), c.draws());
}

TEST(Mcmc, SurrogateMomentsMatchClosedForm) {
  const SurrogateSetup s(300, 4, 1.0, 104);
  RandomSource rs(104, 1);
  const PosteriorSample chain = mcmc_sample(s.model, s.stat, s.fit, short_chain(100000), rs);
  EXPECT_GT(chain.acceptance_rate, 0.1);
  EXPECT_LT(chain.split_rhat, 1.01);
  const MomentCheck mc = chain_moment_check(chain, s.post_mean(), s.post_cov());
  EXPECT_LE(mc.max_mean_z, 4.0);
  EXPECT_LE(mc.max_cov_z, 4.0);
}

TEST(Mcmc, HugeProposalScaleDiverges) {
  const SurrogateSetup s(300, 4, 1.0, 105);
  RandomSource rs(105, 1);
  McmcConfig c = short_chain(20000);
  c.scale_multiplier = 100.0;
  EXPECT_THROW(mcmc_sample(s.model, s.stat, s.fit, c, rs), ChainDiverged);
}

TEST(Mcmc, TwoSeedsAgree) {
  RandomSource rs(106, 0);
  const LogDensityModel m(1000, 4);
  const Vector t = m.statistic(m.sample(sobolev_truth(4, 2.0), rs));
  const FitResult fit = fit_pmle(m, t, Vector::Zero(4), Vector::Zero(4));
  RandomSource a(106, 1);
  RandomSource b(106, 2);
  const PosteriorSample ca = mcmc_sample(m, t, fit, short_chain(40000), a);
  const PosteriorSample cb = mcmc_sample(m, t, fit, short_chain(40000), b);
  const Vector ma = ca.mean();
  const Vector mb = cb.mean();
  for (Index j = 0; j < 4; ++j) {
    const double se = std::hypot(batch_means_se(ca.draws.row(j).transpose()),
                                 batch_means_se(cb.draws.row(j).transpose()));
    EXPECT_LT(std::abs(ma(j) - mb(j)), 5.0 * se);
  }
}

TEST(Importance, SurrogateWeightsAreUniform) {
  const SurrogateSetup s(300, 4, 1.0, 107);
  const GaussianBlock block = GaussianBlock::generate(2000, 4, RandomSource(107, 1));
  const PosteriorSample is = importance_sample(s.model, s.stat, s.fit, block);
  EXPECT_EQ(is.kind, SamplerKind::importance);
  EXPECT_EQ(is.block, &block);
  EXPECT_NEAR(is.weights.maxCoeff(), 1.0 / 2000.0, 1e-12);
  EXPECT_NEAR(is.ess, 2000.0, 1e-6);
  const LaplaceApprox la = laplace(s.fit);
  EXPECT_LT((is.draws.col(7) - la.from_standard(block.draws().col(7))).norm(), 1e-12);
}

TEST(BatchMeans, IidSeriesMatchesNaiveError) {
  RandomSource rs(108, 0);
  Vector x(100000);
  for (Index i = 0; i < x.size(); ++i) x(i) = rs.normal();
  EXPECT_NEAR(batch_means_se(x), 1.0 / std::sqrt(1e5), 0.3 / std::sqrt(1e5));
}

TEST(Rho, SurrogateMatchesChiSquare) {
  const Index d = 4;
  const SurrogateSetup s(500, d, 0.0, 109);
  const GaussianBlock block = GaussianBlock::generate(200000, d, RandomSource(109, 1));
  const PosteriorSample is = importance_sample(s.model, s.stat, s.fit, block);
  const double x = 2.0 * std::log(500.0);
  const double r0 = select_r0(static_cast<double>(d), x, 1.0);
  const RhoEstimate r = rho_hat(is, s.fit, s.fit.precision, r0, static_cast<double>(d), x, 0.0);
  const boost::math::chi_squared_distribution<double> chi(static_cast<double>(d));
  const double tail = boost::math::cdf(boost::math::complement(chi, r0 * r0));
  const double exact = tail / (1.0 - tail);
  EXPECT_NEAR(r.rho, exact, 4.0 * std::sqrt(exact / 2e5) + 1e-12);
  EXPECT_LE(r.rho, r.bound);
  EXPECT_LE(exact, r.bound);

  const RhoEstimate far = rho_hat(is, s.fit, s.fit.precision, 1e6, 4.0, x, 0.0);
  EXPECT_EQ(far.rho, 0.0);
  double prev = 1e300;
  for (double rr = 0.5; rr < 6.0; rr += 0.5) {
    const double v = rho_hat(is, s.fit, s.fit.precision, rr, 4.0, x, 0.0).rho;
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(Bvm, SurrogateChainErrorIsNoise) {
  const Index d = 4;
  const SurrogateSetup s(1000, d, 1.0, 110);
  RandomSource rs(110, 1);
  McmcConfig c;
  c.keep = 200000;
  c.burn_in = 20000;
  const PosteriorSample chain = mcmc_sample(s.model, s.stat, s.fit, c, rs);
  const GaussianBlock block = GaussianBlock::generate(200000, d, RandomSource(110, 2));
  const LaplaceApprox la = laplace(s.fit);
  const Matrix q = la.factor.lower().transpose();
  const BvmReport sym = bvm_errors(chain, la, q, BvmMode::symmetric, block);
  EXPECT_LE(sym.error, 0.02);
  EXPECT_GT(sym.halfwidth, 0.0);
  EXPECT_EQ(sym.radii.size(), 64);
  const BvmReport sh = bvm_errors(chain, la, q, BvmMode::shifted, block);
  EXPECT_LE(sh.error, 0.02);
  EXPECT_NEAR((q * default_shift(la)).norm(), 1.0, 1e-12);
}

TEST(Bvm, CoupledImportanceSurrogateIsExact) {
  const SurrogateSetup s(1000, 3, 1.0, 111);
  const GaussianBlock block = GaussianBlock::generate(20000, 3, RandomSource(111, 1));
  const PosteriorSample is = importance_sample(s.model, s.stat, s.fit, block);
  const LaplaceApprox la = laplace(s.fit);
  const BvmReport r = bvm_errors(is, la, Matrix::Identity(3, 3), BvmMode::symmetric, block);
  EXPECT_LT(r.error, 1e-12);
}

TEST(Bvm, HugeRadiusGivesZeroError) {
  const SurrogateSetup s(200, 3, 1.0, 112);
  RandomSource rs(112, 1);
  const PosteriorSample chain = mcmc_sample(s.model, s.stat, s.fit, short_chain(5000), rs);
  const GaussianBlock block = GaussianBlock::generate(5000, 3, RandomSource(112, 2));
  const LaplaceApprox la = laplace(s.fit);
  const BvmReport r = bvm_errors_on_grid(chain, la, Matrix::Identity(3, 3), block,
                                         Vector::Constant(1, 1e6), Vector::Zero(3));
  EXPECT_NEAR(r.posterior_cdf(0), 1.0, 1e-12);
  EXPECT_NEAR(r.gaussian_cdf(0), 1.0, 1e-12);
  EXPECT_LT(r.error, 1e-12);
}

TEST(MeanGap, SurrogateGapsAreNoise) {
  const SurrogateSetup s(500, 4, 1.0, 113);
  RandomSource rs(113, 1);
  const PosteriorSample chain = mcmc_sample(s.model, s.stat, s.fit, short_chain(100000), rs);
  const Matrix q = laplace(s.fit).factor.lower().transpose();
  const MeanGap g = posterior_mean_gap(chain, s.fit, q);
  EXPECT_LE(g.gap, 2.0 * g.gap_halfwidth);
  EXPECT_LE(g.variance_gap, 0.05);
  EXPECT_EQ(posterior_mean_gap(chain, s.fit, Matrix::Zero(4, 4)).gap, 0.0);
}

TEST(MeanCentered, EffectiveDimensionOfProjectors) {
  const SurrogateSetup s(500, 5, 1.0, 114);
  const GaussianBlock block = GaussianBlock::generate(20000, 5, RandomSource(114, 1));
  const PosteriorSample is = importance_sample(s.model, s.stat, s.fit, block);
  const LaplaceApprox la = laplace(s.fit);
  const Matrix q = la.factor.lower().transpose();
  const MeanCenteredReport full = bvm_mean_centered(is, la, q, Matrix::Identity(5, 5), block);
  EXPECT_NEAR(full.p_tilde_pi, 5.0, 1e-10);
  EXPECT_LE(full.bvm.error, full.bvm.halfwidth + 0.02);
  Eigen::SelfAdjointEigenSolver<Matrix> es(la.precision);
  const Matrix u = es.eigenvectors().rightCols(3);
  const MeanCenteredReport part = bvm_mean_centered(is, la, q, u * u.transpose(), block);
  EXPECT_NEAR(part.p_tilde_pi, 3.0, 1e-10);
  EXPECT_LT(part.commute_gap, 1e-8);
}

TEST(CredibleRadius, ExactValues) {
  EXPECT_NEAR(credible_radius_exact(Vector::Constant(1, 1.0), 0.05), 1.95996, 5e-6);
  EXPECT_NEAR(credible_radius_exact(Vector::Ones(2), 0.05), std::sqrt(-2.0 * std::log(0.05)), 1e-8);
  EXPECT_NEAR(credible_radius_exact(Vector::Ones(2), 0.05), 2.44775, 5e-6);
}

TEST(CredibleRadius, DiagonalMatchesOversampledMonteCarlo) {
  const Vector sig = Eigen::Vector2d(1.0, 0.5);
  RandomSource rs(115, 0);
  constexpr std::size_t kDraws = 10000000;
  std::vector<double> r(kDraws);
  for (auto& v : r) {
    const double a = rs.normal();
    const double b = 0.5 * rs.normal();
    v = std::sqrt(a * a + b * b);
  }
  std::nth_element(r.begin(), r.begin() + 9000000, r.end());
  EXPECT_NEAR(credible_radius_exact(sig, 0.1), r[9000000], 1e-2);

  FitResult fit;
  fit.theta = Vector::Zero(2);
  fit.precision = sig.cwiseInverse().cwiseAbs2().asDiagonal();
  RandomSource rs2(115, 1);
  EXPECT_NEAR(credible_radius(laplace(fit), Matrix::Identity(2, 2), 0.1, 1000000, rs2), r[9000000],
              1e-2);
}

TEST(CredibleRadius, MonotoneInAlphaAndCovariance) {
  const GaussianBlock block = GaussianBlock::generate(50000, 3, RandomSource(116, 0));
  FitResult fit;
  fit.theta = Vector::Zero(3);
  fit.precision = Eigen::Vector3d(1.0, 2.0, 4.0).asDiagonal();
  const LaplaceApprox la = laplace(fit);
  const Matrix q = Matrix::Identity(3, 3);
  double prev = 1e300;
  for (double a : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    const double r = credible_radius(la, q, a, block);
    EXPECT_LT(r, prev);
    prev = r;
  }
  FitResult wider = fit;
  wider.precision = Eigen::Vector3d(0.9, 2.0, 3.0).asDiagonal();
  EXPECT_GT(credible_radius(laplace(wider), q, 0.1, block), credible_radius(la, q, 0.1, block));
}

TEST(Contraction, SurrogateMatchesNoncentralChiSquare) {
  const Index d = 4;
  const double n = 500.0;
  const SurrogateSetup s(500, d, 1.0, 117);
  const TruthContext ctx = fit_target(s.model, s.g2, s.truth);
  const GaussianBlock block = GaussianBlock::generate(200000, d, RandomSource(117, 1));
  const PosteriorSample is = importance_sample(s.model, s.stat, s.fit, block);
  const Matrix q = SpdFactor(ctx.precision).lower().transpose();
  const ContractionReport cr = contraction_check(is, s.truth, q, ctx.precision, 4.0, 4.0, n);
  EXPECT_NEAR(cr.trace, static_cast<double>(d), 1e-10);
  EXPECT_NEAR(cr.norm, 1.0, 1e-10);
  const double lambda = (q * (s.fit.theta - s.truth)).squaredNorm();
  const boost::math::non_central_chi_squared_distribution<double> nc(static_cast<double>(d), lambda);
  const double exact = boost::math::cdf(boost::math::complement(nc, cr.threshold));
  EXPECT_NEAR(cr.exceedance, exact, 4.0 * std::sqrt(exact / 2e5) + 1e-9);
  EXPECT_LE(cr.exceedance, 0.05);
  EXPECT_EQ(contraction_check(is, s.truth, q, ctx.precision, 1e6, 1e6, n).exceedance, 0.0);
}

TEST(Contraction, TraceTermIsEffectiveDimensionForQEqualH) {
  const LogDensityModel m(1000, 6);
  const Vector g2 = PriorSpec::smooth(1.0, 5.0).precision_diagonal(6);
  const TruthContext ctx = fit_target(m, g2, sobolev_truth(6, 2.0));
  const Matrix h = SpdFactor(ctx.h2).lower().transpose();
  PosteriorSample dummy;
  dummy.draws = ctx.target.replicate(1, 10);
  dummy.weights = Vector::Constant(10, 0.1);
  const ContractionReport cr = contraction_check(dummy, ctx.target, h, ctx.precision, 4, 4, 1000);
  EXPECT_NEAR(cr.trace, effective_dimension(m.fisher(ctx.target), g2, ctx.h2), 1e-9);
}

TEST(Coverage, PivotalSurrogateCoverage) {
  const Index d = 3;
  const std::size_t n = 400;
  const double alpha = 0.1;
  const GaussianSurrogateModel m(n, d);
  const Vector truth = sobolev_truth(d, 2.0);
  const Matrix q = std::sqrt(static_cast<double>(n)) * Matrix::Identity(d, d);
  const GaussianBlock block = GaussianBlock::generate(100000, d, RandomSource(118, 0));
  int covered = 0;
  constexpr int kTrials = 1000;
  for (int t = 0; t < kTrials; ++t) {
    RandomSource rs(118, static_cast<std::uint64_t>(t + 1));
    const Vector s = m.statistic(m.sample(truth, rs));
    const FitResult fit = fit_pmle(m, s, Vector::Zero(d), Vector::Zero(d));
    const double r = credible_radius(laplace(fit), q, alpha, block);
    if (coverage_trial(fit.theta, truth, q, r)) ++covered;
  }
  const double se = std::sqrt(alpha * (1 - alpha) / kTrials);
  EXPECT_NEAR(covered / static_cast<double>(kTrials), 1 - alpha, 3 * se);
  EXPECT_TRUE(coverage_trial(Vector::Zero(d), truth, q, 1e9));
}

TEST(BiasVariance, ZeroWithoutPenalty) {
  const LogDensityModel m(500, 4);
  const TruthContext ctx = fit_target(m, Vector::Zero(4), sobolev_truth(4, 2.0));
  EXPECT_EQ(bias_variance_ratio(ctx, Matrix::Identity(4, 4)), 0.0);
}

TEST(PriorComparison, IdenticalPriors) {
  const SurrogateSetup s(300, 4, 1.0, 119);
  const GaussianBlock block = GaussianBlock::generate(100000, 4, RandomSource(119, 1));
  const PosteriorSample is = importance_sample(s.model, s.stat, s.fit, block);
  const Matrix q = std::sqrt(300.0) * Matrix::Identity(4, 4);
  const PriorComparison pc = prior_comparison(s.fit, s.fit, is, is, q, 3.0, 0.0, 300.0);
  EXPECT_EQ(pc.distance, 0.0);
  EXPECT_EQ(pc.variance_term, 0.0);
  EXPECT_EQ(pc.bias_term, 0.0);
  EXPECT_DOUBLE_EQ(pc.inverse_n, 1.0 / 300.0);
}

TEST(PriorComparison, FlatVersusUnitPrecisionClosedForm) {
  const Index d = 3;
  const double n = 20.0;
  const SurrogateSetup flat(20, d, 0.0, 120);
  const Vector g1 = Vector::Ones(d);
  const FitResult fit1 = fit_pmle(flat.model, flat.stat, g1, Vector::Zero(d));
  const GaussianBlock block = GaussianBlock::generate(400000, d, RandomSource(120, 1));
  const PosteriorSample a = importance_sample(flat.model, flat.stat, flat.fit, block);
  const PosteriorSample b = importance_sample(flat.model, flat.stat, fit1, block);
  const Matrix q = std::sqrt(n) * Matrix::Identity(d, d);
  const PriorComparison pc = prior_comparison(flat.fit, fit1, a, b, q, 3.0, 0.01, n);

  // |Q(v - c1)|^2 is noncentral chi-square under the flat posterior and a
  // scaled central chi-square under the other.
  const double lambda = flat.stat.squaredNorm() / (n * (n + 1) * (n + 1));
  const boost::math::non_central_chi_squared_distribution<double> nc(static_cast<double>(d), lambda);
  const boost::math::chi_squared_distribution<double> chi(static_cast<double>(d));
  double exact = 0.0;
  for (double r = 0.0; r < 8.0; r += 1e-3) {
    exact = std::max(exact, std::abs(boost::math::cdf(nc, r * r) - boost::math::cdf(chi, r * r * (n + 1) / n)));
  }
  EXPECT_NEAR(pc.distance, exact, pc.halfwidth + 5e-3);
  EXPECT_NEAR(pc.delta3, 27.0 * 0.01, 1e-15);
  EXPECT_NEAR(pc.variance_term, d * (1.0 - n / (n + 1)) / std::sqrt(static_cast<double>(d)), 1e-10);
  EXPECT_GT(pc.bias_term, 0.0);
  EXPECT_THROW(prior_comparison(fit1, flat.fit, b, a, q, 3.0, 0.01, n), OrderingViolated);
}

TEST(WriteDraws, WeightedCsv) {
  const SurrogateSetup s(100, 2, 1.0, 121);
  const GaussianBlock block = GaussianBlock::generate(4, 2, RandomSource(121, 1));
  PosteriorSample is = importance_sample(s.model, s.stat, s.fit, block);
  is.weights << 0.1, 0.2, 0.3, 0.4;
  const auto path = std::filesystem::temp_directory_path() / "bvmlab_draws_test.csv";
  write_draws(is, path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2);
    ++lines;
  }
  EXPECT_EQ(lines, 4);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace bvmlab
