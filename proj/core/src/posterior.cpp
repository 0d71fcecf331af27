#include "bvmlab/posterior.hpp"

#include "bvmlab/dataset.hpp"
#include "bvmlab/errors.hpp"
#include "bvmlab/quadrature.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

namespace bvmlab {

namespace {

constexpr Index kChunk = 65536;

bool uniform(const PosteriorSample& s) { return s.weights.size() == 0; }

double weight(const PosteriorSample& s, Index i) {
  return uniform(s) ? 1.0 / static_cast<double>(s.size()) : s.weights[i];
}

// Weighted empirical CDF evaluated at sorted radii.
class WeightedCdf {
 public:
  WeightedCdf(const Vector& values, const Vector& weights) : n_(values.size()) {
    order_.resize(static_cast<std::size_t>(n_));
    std::iota(order_.begin(), order_.end(), Index{0});
    std::sort(order_.begin(), order_.end(),
              [&](Index a, Index b) { return values[a] < values[b]; });
    sorted_.resize(n_);
    cumulative_.resize(n_);
    double acc = 0.0;
    for (Index k = 0; k < n_; ++k) {
      const Index i = order_[static_cast<std::size_t>(k)];
      sorted_[k] = values[i];
      acc += weights.size() == 0 ? 1.0 / static_cast<double>(n_) : weights[i];
      cumulative_[k] = acc;
    }
  }

  double operator()(double r) const {
    const double* it = std::upper_bound(sorted_.data(), sorted_.data() + n_, r);
    const Index k = static_cast<Index>(it - sorted_.data());
    return k == 0 ? 0.0 : std::min(1.0, cumulative_[k - 1]);
  }

  double quantile(double level) const {
    const double* it = std::lower_bound(cumulative_.data(), cumulative_.data() + n_, level);
    const Index k = std::min<Index>(static_cast<Index>(it - cumulative_.data()), n_ - 1);
    return sorted_[k];
  }

 private:
  Index n_;
  std::vector<Index> order_;
  Vector sorted_;
  Vector cumulative_;
};

Vector radius_grid(const WeightedCdf& a, const WeightedCdf& b, Index points) {
  const double lo = std::min(a.quantile(0.0005), b.quantile(0.0005));
  const double hi = std::max(a.quantile(0.9995), b.quantile(0.9995));
  if (points < 2 || !(hi > lo)) return Vector::Constant(1, hi);
  return Vector::LinSpaced(points, lo, hi);
}

// |Q (x_i - offset)| for every column x_i.
Vector column_norms(const Matrix& cols, const Vector& offset, const Matrix& q) {
  Vector out(cols.cols());
  for (Index start = 0; start < cols.cols(); start += kChunk) {
    const Index count = std::min(kChunk, cols.cols() - start);
    const Matrix y = q * (cols.middleCols(start, count).colwise() - offset);
    out.segment(start, count) = y.colwise().norm().transpose();
  }
  return out;
}

// |Q (L^{-T} g_j - shift)| over the whole block.
Vector gaussian_norms(const GaussianBlock& block, const SpdFactor& factor, const Matrix& q,
                      const Vector& shift) {
  Vector out(block.size());
  for (Index start = 0; start < block.size(); start += kChunk) {
    const Index count = std::min(kChunk, block.size() - start);
    const Matrix x = factor.inverse_transpose(Matrix(block.draws().middleCols(start, count)));
    out.segment(start, count) = (q * (x.colwise() - shift)).colwise().norm().transpose();
  }
  return out;
}

// Standard error of sum_i w_i f_i for a weighted or chain sample.
double indicator_se(const PosteriorSample& s, const Vector& values, double r, double p) {
  const Index n = s.size();
  if (uniform(s)) {
    Vector f(n);
    for (Index i = 0; i < n; ++i) f[i] = values[i] <= r ? 1.0 : 0.0;
    return batch_means_se(f);
  }
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double psi = s.weights[i] * ((values[i] <= r ? 1.0 : 0.0) - p);
    acc += psi * psi;
  }
  return std::sqrt(acc);
}

double binomial_se(double p, double n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); }

void check_sample(const PosteriorSample& s, Index dim) {
  if (s.size() == 0) throw std::invalid_argument("empty posterior sample");
  require_same_dim(s.dim(), dim, "posterior sample dimension");
}

}  // namespace

// ---------------------------------------------------------------------------

Vector LaplaceApprox::from_standard(const Vector& g) const {
  return center + factor.inverse_transpose(g);
}

Vector LaplaceApprox::sample(RandomSource& rs) const {
  return from_standard(rs.gaussian_vector(dim()));
}

double LaplaceApprox::log_density(const Vector& theta) const {
  const double q = factor.apply_transpose(theta - center).squaredNorm();
  return -0.5 * q + 0.5 * factor.log_det() -
         0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi);
}

LaplaceApprox laplace(const FitResult& fit) {
  return LaplaceApprox{fit.theta, fit.precision, SpdFactor(fit.precision)};
}

GaussianBlock GaussianBlock::generate(Index size, Index dim, RandomSource rs, bool antithetic) {
  if (size < 2 || dim < 1) throw std::invalid_argument("Gaussian block needs size >= 2");
  GaussianBlock b;
  b.antithetic_ = antithetic && size % 2 == 0;
  b.draws_.resize(dim, size);
  if (b.antithetic_) {
    for (Index k = 0; k < size; k += 2) {
      for (Index j = 0; j < dim; ++j) b.draws_(j, k) = rs.normal();
      b.draws_.col(k + 1) = -b.draws_.col(k);
    }
  } else {
    rs.fill_normal(b.draws_);
  }
  return b;
}

Vector PosteriorSample::mean() const {
  if (uniform(*this)) return draws.rowwise().mean();
  return draws * weights;
}

Matrix PosteriorSample::covariance() const {
  const Vector m = mean();
  const Matrix c = draws.colwise() - m;
  if (uniform(*this)) return c * c.transpose() / static_cast<double>(size() - 1);
  return c * weights.asDiagonal() * c.transpose();
}

// ---------------------------------------------------------------------------

PosteriorSample mcmc_sample(const Model& model, const Vector& statistic, const FitResult& fit,
                            const McmcConfig& config, RandomSource& rs) {
  const Index d = fit.theta.size();
  if (config.keep < 4 || config.thin < 1 || config.burn_in < 0) {
    throw std::invalid_argument("invalid chain configuration");
  }
  const SpdFactor factor(fit.precision);
  const double c = (config.scale > 0.0 ? config.scale : 2.38 / std::sqrt(static_cast<double>(d))) *
                   config.scale_multiplier;
  auto target = [&](const Vector& theta) {
    double v = -std::numeric_limits<double>::infinity();
    try {
      v = penalized_log_lik(model, statistic, fit.g2, theta);
    } catch (const NonFiniteIntegrand&) {
      throw ChainDiverged("non-finite L_G at a proposal");
    }
    if (!std::isfinite(v)) throw ChainDiverged("non-finite L_G at a proposal");
    return v;
  };

  PosteriorSample s;
  s.kind = SamplerKind::random_walk;
  s.burn_in = config.burn_in;
  s.thin = config.thin;
  s.draws.resize(d, config.keep);
  Vector theta = fit.theta;
  double lp = target(theta);
  const Index total = config.burn_in + config.keep * config.thin;
  Index accepted = 0;
  Index stored = 0;
  for (Index t = 0; t < total; ++t) {
    const Vector proposal = theta + c * factor.inverse_transpose(rs.gaussian_vector(d));
    const double lp_new = target(proposal);
    if (std::log(rs.uniform()) < lp_new - lp) {
      theta = proposal;
      lp = lp_new;
      ++accepted;
    }
    if (t >= config.burn_in && (t - config.burn_in) % config.thin == config.thin - 1) {
      s.draws.col(stored++) = theta;
    }
  }
  s.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total);
  if (s.acceptance_rate < 0.02) {
    throw ChainDiverged("acceptance rate " + std::to_string(s.acceptance_rate) + " < 0.02");
  }
  // Split-chain scale reduction and batch-means effective size.
  const Index half = config.keep / 2;
  double rhat = 1.0;
  double ess = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < d; ++j) {
    const Vector a = s.draws.row(j).head(half).transpose();
    const Vector b = s.draws.row(j).segment(half, half).transpose();
    const double ma = a.mean();
    const double mb = b.mean();
    const double va = (a.array() - ma).square().sum() / static_cast<double>(half - 1);
    const double vb = (b.array() - mb).square().sum() / static_cast<double>(half - 1);
    const double w = 0.5 * (va + vb);
    const double m = 0.5 * (ma + mb);
    const double bvar = static_cast<double>(half) * ((ma - m) * (ma - m) + (mb - m) * (mb - m));
    const double nh = static_cast<double>(half);
    if (w > 0.0) rhat = std::max(rhat, std::sqrt(((nh - 1.0) / nh * w + bvar / nh) / w));
    const Vector row = s.draws.row(j).transpose();
    const double se = batch_means_se(row);
    const double var = (row.array() - row.mean()).square().sum() / static_cast<double>(row.size() - 1);
    if (se > 0.0) ess = std::min(ess, var / (se * se));
  }
  s.split_rhat = rhat;
  s.ess = std::isfinite(ess) ? ess : static_cast<double>(config.keep);
  return s;
}

PosteriorSample importance_sample(const Model& model, const Vector& statistic,
                                  const FitResult& fit, const GaussianBlock& block, Index draws) {
  const Index d = fit.theta.size();
  require_same_dim(block.dim(), d, "Gaussian block dimension");
  const Index n = draws > 0 ? std::min(draws, block.size()) : block.size();
  const SpdFactor factor(fit.precision);
  PosteriorSample s;
  s.kind = SamplerKind::importance;
  s.block = &block;
  s.draws = factor.inverse_transpose(Matrix(block.draws().leftCols(n)));
  s.draws.colwise() += fit.theta;
  const Vector a = model.log_partition_batch(s.draws);
  const double l0 = penalized_log_lik(model, statistic, fit.g2, fit.theta);
  Vector logw(n);
  for (Index i = 0; i < n; ++i) {
    const auto col = s.draws.col(i);
    const double lg = statistic.dot(col) - a[i] -
                      0.5 * (fit.g2.array() * col.array().square()).sum();
    logw[i] = lg - l0 + 0.5 * block.draws().col(i).squaredNorm();
  }
  if (!logw.allFinite()) throw ChainDiverged("non-finite importance weight");
  const double mx = logw.maxCoeff();
  s.weights = (logw.array() - mx).exp();
  s.weights /= s.weights.sum();
  s.ess = 1.0 / s.weights.squaredNorm();
  return s;
}

double batch_means_se(const Eigen::Ref<const Vector>& series, Index batches) {
  const Index n = series.size();
  if (n < 2 * batches) batches = std::max<Index>(2, n / 2);
  const Index len = n / batches;
  Vector means(batches);
  for (Index b = 0; b < batches; ++b) means[b] = series.segment(b * len, len).mean();
  const double m = means.mean();
  const double var = (means.array() - m).square().sum() / static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

MomentCheck chain_moment_check(const PosteriorSample& sample, const Vector& mean,
                               const Matrix& covariance) {
  check_sample(sample, mean.size());
  MomentCheck out;
  const Index d = sample.dim();
  const Vector m = sample.draws.rowwise().mean();
  const Matrix c = sample.draws.colwise() - m;
  for (Index j = 0; j < d; ++j) {
    const double se = batch_means_se(c.row(j).transpose());
    out.max_mean_z = std::max(out.max_mean_z, std::abs(m[j] - mean[j]) / se);
    for (Index k = 0; k <= j; ++k) {
      const Vector prod = (c.row(j).array() * c.row(k).array()).matrix().transpose();
      const double se_c = batch_means_se(prod);
      out.max_cov_z = std::max(out.max_cov_z, std::abs(prod.mean() - covariance(j, k)) / se_c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RhoEstimate rho_hat(const PosteriorSample& sample, const FitResult& fit, const Matrix& h2,
                    double r0, double p_tilde, double x, double diamond) {
  check_sample(sample, fit.theta.size());
  const Matrix ht = SpdFactor(h2).lower().transpose();
  const Vector values = column_norms(sample.draws, fit.theta, ht);
  double inside = 0.0;
  double outside = 0.0;
  for (Index i = 0; i < sample.size(); ++i) {
    (values[i] <= r0 ? inside : outside) += weight(sample, i);
  }
  if (inside <= 0.0) throw EmptyDenominator("no posterior mass inside r0");
  RhoEstimate r;
  r.rho = outside / inside;
  const double e = std::exp(-0.5 * (p_tilde + x));
  r.bound = diamond < 1.0 ? e / ((1.0 - diamond) * (1.0 - e))
                          : std::numeric_limits<double>::infinity();
  return r;
}

Vector default_shift(const LaplaceApprox& laplace) {
  const Index d = laplace.dim();
  return laplace.factor.inverse_transpose(
      Vector(Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)))));
}

BvmReport bvm_errors_on_grid(const PosteriorSample& sample, const LaplaceApprox& laplace,
                             const Matrix& q, const GaussianBlock& block, const Vector& radii,
                             const Vector& shift) {
  check_sample(sample, laplace.dim());
  require_same_dim(q.cols(), laplace.dim(), "Q columns");
  const Vector offset = laplace.center + shift;
  const Vector post = column_norms(sample.draws, offset, q);
  BvmReport rep;
  rep.radii = radii;
  rep.posterior_cdf.resize(radii.size());
  rep.gaussian_cdf.resize(radii.size());
  const bool coupled = sample.kind == SamplerKind::importance && sample.block == &block;
  if (coupled) {
    // Both laws evaluated on the same proposal points.
    const WeightedCdf fp(post, sample.weights);
    const WeightedCdf fg(post, Vector());
    const Index n = sample.size();
    Index best = 0;
    for (Index k = 0; k < radii.size(); ++k) {
      rep.posterior_cdf[k] = fp(radii[k]);
      rep.gaussian_cdf[k] = fg(radii[k]);
      if (std::abs(rep.posterior_cdf[k] - rep.gaussian_cdf[k]) >
          std::abs(rep.posterior_cdf[best] - rep.gaussian_cdf[best])) {
        best = k;
      }
    }
    rep.error = std::abs(rep.posterior_cdf[best] - rep.gaussian_cdf[best]);
    rep.argmax_radius = radii[best];
    const double pp = rep.posterior_cdf[best];
    const double pg = rep.gaussian_cdf[best];
    const double r = radii[best];
    Vector psi(n);
    for (Index i = 0; i < n; ++i) {
      const double f = post[i] <= r ? 1.0 : 0.0;
      psi[i] = static_cast<double>(n) * sample.weights[i] * (f - pp) - (f - pg);
    }
    const bool paired = block.antithetic() && n % 2 == 0;
    const Index units = paired ? n / 2 : n;
    double acc = 0.0;
    double mean = 0.0;
    for (Index u = 0; u < units; ++u) {
      const double v = paired ? 0.5 * (psi[2 * u] + psi[2 * u + 1]) : psi[u];
      mean += v;
      acc += v * v;
    }
    mean /= static_cast<double>(units);
    const double var = acc / static_cast<double>(units) - mean * mean;
    rep.halfwidth = 2.0 * std::sqrt(std::max(var, 0.0) / static_cast<double>(units));
    return rep;
  }
  const Vector gauss = gaussian_norms(block, laplace.factor, q, shift);
  const WeightedCdf fp(post, sample.weights);
  const WeightedCdf fg(gauss, Vector());
  Index best = 0;
  for (Index k = 0; k < radii.size(); ++k) {
    rep.posterior_cdf[k] = fp(radii[k]);
    rep.gaussian_cdf[k] = fg(radii[k]);
    if (std::abs(rep.posterior_cdf[k] - rep.gaussian_cdf[k]) >
        std::abs(rep.posterior_cdf[best] - rep.gaussian_cdf[best])) {
      best = k;
    }
  }
  rep.error = std::abs(rep.posterior_cdf[best] - rep.gaussian_cdf[best]);
  rep.argmax_radius = radii[best];
  const double se_post = indicator_se(sample, post, radii[best], rep.posterior_cdf[best]);
  const double se_gauss =
      binomial_se(rep.gaussian_cdf[best], static_cast<double>(block.size()));
  rep.halfwidth = 2.0 * (se_post + se_gauss);
  return rep;
}

BvmReport bvm_errors(const PosteriorSample& sample, const LaplaceApprox& laplace, const Matrix& q,
                     BvmMode mode, const GaussianBlock& block, Index grid_points,
                     std::optional<Vector> shift) {
  check_sample(sample, laplace.dim());
  const Vector a = mode == BvmMode::symmetric
                       ? Vector::Zero(laplace.dim())
                       : (shift ? *shift : default_shift(laplace));
  const bool coupled = sample.kind == SamplerKind::importance && sample.block == &block;
  const Vector post = column_norms(sample.draws, laplace.center + a, q);
  const WeightedCdf fp(post, sample.weights);
  Vector radii;
  if (coupled) {
    radii = radius_grid(fp, WeightedCdf(post, Vector()), grid_points);
  } else {
    const Vector gauss = gaussian_norms(block, laplace.factor, q, a);
    radii = radius_grid(fp, WeightedCdf(gauss, Vector()), grid_points);
  }
  return bvm_errors_on_grid(sample, laplace, q, block, radii, a);
}

MeanGap posterior_mean_gap(const PosteriorSample& sample, const FitResult& fit, const Matrix& q) {
  check_sample(sample, fit.theta.size());
  MeanGap g;
  const Index n = sample.size();
  const Vector mean = sample.mean();
  const Vector qd = q * (mean - fit.theta);
  g.gap = qd.norm();
  const Matrix y = q * sample.draws;
  const Vector ybar = q * mean;
  double se2 = 0.0;
  for (Index k = 0; k < y.rows(); ++k) {
    if (uniform(sample)) {
      const double se = batch_means_se(y.row(k).transpose());
      se2 += se * se;
    } else {
      const bool paired = sample.block != nullptr && sample.block->antithetic() && n % 2 == 0;
      const Index units = paired ? n / 2 : n;
      double acc = 0.0;
      for (Index u = 0; u < units; ++u) {
        double v = 0.0;
        if (paired) {
          v = 0.5 * (sample.weights[2 * u] * (y(k, 2 * u) - ybar[k]) +
                     sample.weights[2 * u + 1] * (y(k, 2 * u + 1) - ybar[k]));
        } else {
          v = sample.weights[u] * (y(k, u) - ybar[k]);
        }
        v *= static_cast<double>(n);
        acc += v * v;
      }
      se2 += acc / static_cast<double>(units) / static_cast<double>(units);
    }
  }
  g.gap_halfwidth = 2.0 * std::sqrt(se2);

  const SpdFactor factor(fit.precision);
  const Index d = fit.theta.size();
  auto gap_of = [&](const Matrix& cov) {
    const Matrix m = Matrix::Identity(d, d) - factor.lower().transpose() * cov * factor.lower();
    return symmetric_norm(0.5 * (m + m.transpose()));
  };
  g.variance_gap = gap_of(sample.covariance());
  // Spread of the variance gap over contiguous batches.
  constexpr Index kBatches = 20;
  const Index len = n / kBatches;
  if (len >= 4) {
    Vector gaps(kBatches);
    for (Index b = 0; b < kBatches; ++b) {
      PosteriorSample part;
      part.draws = sample.draws.middleCols(b * len, len);
      if (!uniform(sample)) {
        part.weights = sample.weights.segment(b * len, len);
        part.weights /= part.weights.sum();
      }
      gaps[b] = gap_of(part.covariance());
    }
    const double m = gaps.mean();
    const double sd = std::sqrt((gaps.array() - m).square().sum() / (kBatches - 1));
    g.variance_halfwidth = 2.0 * sd / std::sqrt(static_cast<double>(kBatches));
  }
  return g;
}

MeanCenteredReport bvm_mean_centered(const PosteriorSample& sample, const LaplaceApprox& laplace,
                                     const Matrix& q, const Matrix& projector,
                                     const GaussianBlock& block, Index grid_points) {
  check_sample(sample, laplace.dim());
  MeanCenteredReport out;
  const Matrix qp = q * projector;
  const Matrix inv = laplace.factor.inverse();
  out.p_tilde_pi = (projector * laplace.precision * projector * inv * projector).trace();
  out.commute_gap = symmetric_norm(0.5 * ((laplace.precision * projector - projector * laplace.precision) +
                                          (laplace.precision * projector - projector * laplace.precision).transpose()));
  // Recentre the posterior at its mean; the Gaussian side keeps its center.
  PosteriorSample centered = sample;
  const Vector shift = sample.mean() - laplace.center;
  centered.draws = sample.draws.colwise() - shift;
  if (sample.kind == SamplerKind::importance) centered.block = nullptr;
  const Vector a = Vector::Zero(laplace.dim());
  const Vector post = column_norms(centered.draws, laplace.center, qp);
  const Vector gauss = gaussian_norms(block, laplace.factor, qp, a);
  const Vector radii =
      radius_grid(WeightedCdf(post, centered.weights), WeightedCdf(gauss, Vector()), grid_points);
  out.bvm = bvm_errors_on_grid(centered, laplace, qp, block, radii, a);
  return out;
}

// ---------------------------------------------------------------------------

double credible_radius(const LaplaceApprox& laplace, const Matrix& q, double alpha,
                       const GaussianBlock& block) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  Vector norms = gaussian_norms(block, laplace.factor, q, Vector::Zero(laplace.dim()));
  const auto k = static_cast<Index>(
      std::ceil((1.0 - alpha) * static_cast<double>(norms.size()))) - 1;
  std::nth_element(norms.data(), norms.data() + k, norms.data() + norms.size());
  return norms[k];
}

double credible_radius(const LaplaceApprox& laplace, const Matrix& q, double alpha,
                       std::size_t n_mc, RandomSource& rs) {
  const GaussianBlock block =
      GaussianBlock::generate(static_cast<Index>(n_mc), laplace.dim(), rs, false);
  return credible_radius(laplace, q, alpha, block);
}

double credible_radius_exact(const Vector& sigmas, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  const boost::math::normal_distribution<double> normal;
  if (sigmas.size() == 1) {
    return std::abs(sigmas[0]) * boost::math::quantile(normal, 1.0 - 0.5 * alpha);
  }
  if (sigmas.size() != 2) throw std::invalid_argument("exact radius needs one or two scales");
  const double s1 = std::abs(sigmas[0]);
  const double s2 = std::abs(sigmas[1]);
  const UnitQuadrature quad(1024);
  // P(s1^2 z1^2 + s2^2 z2^2 <= r^2) with z1 = (r / s1) sin t.
  auto prob = [&](double r) {
    const double a = r / s1;
    return quad.integrate([&](double u) {
      const double t = std::numbers::pi * (u - 0.5);
      const double z = a * std::sin(t);
      const double inner = 2.0 * boost::math::cdf(normal, r * std::cos(t) / s2) - 1.0;
      return std::numbers::pi * a * std::cos(t) * boost::math::pdf(normal, z) * inner;
    });
  };
  double lo = 0.0;
  double hi = 1.0;
  while (prob(hi) < 1.0 - alpha) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (prob(mid) < 1.0 - alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ContractionReport contraction_check(const PosteriorSample& sample, const Vector& center,
                                    const Matrix& q, const Matrix& target_precision, double c1,
                                    double c2, double n) {
  check_sample(sample, center.size());
  const SpdFactor dg(target_precision);
  const Matrix cov = q * dg.solve(Matrix(q.transpose()));
  ContractionReport r;
  r.trace = cov.trace();
  r.norm = symmetric_norm(0.5 * (cov + cov.transpose()));
  r.threshold = c1 * r.trace + c2 * std::log(n) * r.norm;
  const Vector values = column_norms(sample.draws, center, q);
  for (Index i = 0; i < sample.size(); ++i) {
    if (values[i] * values[i] > r.threshold) r.exceedance += weight(sample, i);
  }
  return r;
}

double bias_variance_ratio(const TruthContext& truth, const Matrix& q) {
  const SpdFactor dg(truth.precision);
  const double bias = (q * dg.solve(Vector(truth.g2.cwiseProduct(truth.parametric)))).squaredNorm();
  const double trace = (q * dg.solve(Matrix(q.transpose()))).trace();
  return bias / trace;
}

bool coverage_trial(const Vector& estimate, const Vector& truth, const Matrix& q,
                    double r_alpha) {
  require_same_dim(estimate.size(), truth.size(), "coverage vectors");
  return (q * (estimate - truth)).norm() <= r_alpha;
}

// ---------------------------------------------------------------------------

PriorComparison prior_comparison(const FitResult& fit_g, const FitResult& fit_g1,
                                 const PosteriorSample& sample_g,
                                 const PosteriorSample& sample_g1, const Matrix& q, double r0,
                                 double tau3, double n, Index grid_points) {
  const Index d = fit_g.theta.size();
  const Index d1 = fit_g1.theta.size();
  if (d1 > d) throw OrderingViolated("second prior has a larger support");
  for (Index j = 0; j < d1; ++j) {
    if (fit_g.g2[j] > fit_g1.g2[j]) {
      throw OrderingViolated("g_j^2 > g1_j^2 at j = " + std::to_string(j + 1));
    }
  }
  check_sample(sample_g, d);
  check_sample(sample_g1, d1);
  const Vector center1 = leading(fit_g1.theta, d);
  Matrix draws1 = Matrix::Zero(d, sample_g1.size());
  draws1.topRows(d1) = sample_g1.draws;
  const Vector va = column_norms(sample_g.draws, center1, q);
  const Vector vb = column_norms(draws1, center1, q);
  const WeightedCdf fa(va, sample_g.weights);
  const WeightedCdf fb(vb, sample_g1.weights);
  const Vector radii = radius_grid(fa, fb, grid_points);
  PriorComparison out;
  double pa = 0.0;
  double pb = 0.0;
  for (Index k = 0; k < radii.size(); ++k) {
    const double a = fa(radii[k]);
    const double b = fb(radii[k]);
    if (std::abs(a - b) >= out.distance) {
      out.distance = std::abs(a - b);
      pa = a;
      pb = b;
    }
  }
  const double ess_a = uniform(sample_g) ? sample_g.ess : 1.0 / sample_g.weights.squaredNorm();
  const double ess_b = uniform(sample_g1) ? sample_g1.ess : 1.0 / sample_g1.weights.squaredNorm();
  out.halfwidth = 2.0 * (binomial_se(pa, std::max(ess_a, 1.0)) + binomial_se(pb, std::max(ess_b, 1.0)));
  out.delta3 = std::pow(r0, 3) * tau3;
  out.inverse_n = 1.0 / n;
  const Matrix cov_g = SpdFactor(fit_g.precision).inverse();
  Matrix cov_g1 = Matrix::Zero(d, d);
  cov_g1.topLeftCorner(d1, d1) = SpdFactor(fit_g1.precision).inverse();
  const Matrix qcq = q * cov_g * q.transpose();
  const double fr = qcq.norm();
  out.variance_term = (q * (cov_g - cov_g1) * q.transpose()).trace() / fr;
  out.bias_term = (q * (fit_g.theta - center1)).squaredNorm() / fr;
  return out;
}

void write_draws(const PosteriorSample& sample, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const bool weighted = !uniform(sample);
  for (Index i = 0; i < sample.size(); ++i) {
    if (weighted) out << format_double(sample.weights[i]) << ',';
    for (Index j = 0; j < sample.dim(); ++j) {
      if (j > 0) out << ',';
      out << format_double(sample.draws(j, i));
    }
    out << '\n';
  }
}

}  // namespace bvmlab
