#pragma once

#include "bvmlab/estimation.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/numerics.hpp"
#include "bvmlab/random.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace bvmlab {

// N(center, precision^{-1}).
struct LaplaceApprox {
  Vector center;
  Matrix precision;
  SpdFactor factor;

  Index dim() const { return center.size(); }
  // center + L^{-T} g
  Vector from_standard(const Vector& g) const;
  Vector sample(RandomSource& rs) const;
  double log_density(const Vector& theta) const;
};

LaplaceApprox laplace(const FitResult& fit);

// Immutable block of standard normal draws stored column-wise (dim x size).
// With antithetic pairing, column 2k+1 is the negation of column 2k.
class GaussianBlock {
 public:
  static GaussianBlock generate(Index size, Index dim, RandomSource rs, bool antithetic = true);

  Index size() const { return draws_.cols(); }
  Index dim() const { return draws_.rows(); }
  bool antithetic() const { return antithetic_; }
  const Matrix& draws() const { return draws_; }

 private:
  Matrix draws_;
  bool antithetic_ = false;
};

enum class SamplerKind { random_walk, importance };

// Posterior draws (dim x size) with normalized weights. Random-walk chains
// carry uniform weights; importance samples reference the Gaussian block
// their proposals were built from.
struct PosteriorSample {
  SamplerKind kind = SamplerKind::random_walk;
  Matrix draws;
  Vector weights;
  const GaussianBlock* block = nullptr;
  double acceptance_rate = 1.0;
  Index burn_in = 0;
  Index thin = 1;
  double split_rhat = 1.0;
  double ess = 0.0;

  Index size() const { return draws.cols(); }
  Index dim() const { return draws.rows(); }
  Vector mean() const;
  Matrix covariance() const;
};

struct McmcConfig {
  Index keep = 200000;
  Index burn_in = 50000;
  Index thin = 1;
  double scale = 0.0;  // 0 selects 2.38 / sqrt(dim)
  double scale_multiplier = 1.0;
};

// Random-walk Metropolis with proposal N(0, c^2 D~^{-2}), started at the pMLE.
// Throws ChainDiverged on acceptance below 0.02 or a non-finite L_G.
PosteriorSample mcmc_sample(const Model& model, const Vector& statistic, const FitResult& fit,
                            const McmcConfig& config, RandomSource& rs);

// Self-normalized importance sampling with the Laplace law as proposal, using
// the first `draws` columns of the block (0 means all of them).
PosteriorSample importance_sample(const Model& model, const Vector& statistic,
                                  const FitResult& fit, const GaussianBlock& block,
                                  Index draws = 0);

// Standard error of the mean of a serially correlated series by batch means.
double batch_means_se(const Eigen::Ref<const Vector>& series, Index batches = 50);

struct MomentCheck {
  double max_mean_z = 0.0;
  double max_cov_z = 0.0;
};

// Largest standardized deviation of chain mean / covariance entries from
// exact values, with batch-means standard errors.
MomentCheck chain_moment_check(const PosteriorSample& sample, const Vector& mean,
                               const Matrix& covariance);

struct RhoEstimate {
  double rho = 0.0;
  double bound = 0.0;
};

// rho = P(|H(v - theta~)| > r0) / P(<= r0); bound with p~ and x.
RhoEstimate rho_hat(const PosteriorSample& sample, const FitResult& fit, const Matrix& h2,
                    double r0, double p_tilde, double x, double diamond);

enum class BvmMode { symmetric, shifted };

struct BvmReport {
  double error = 0.0;
  double halfwidth = 0.0;
  double argmax_radius = 0.0;
  Vector radii;
  Vector posterior_cdf;
  Vector gaussian_cdf;
};

// max_r |P(|Q(v - theta~ - a)| <= r | Y) - P(|Q(L^{-T} g - a)| <= r)|. The
// shift is zero in symmetric mode; in shifted mode it defaults to
// D~^{-1} 1 / sqrt(dim), so that |D~ a| = 1.
BvmReport bvm_errors(const PosteriorSample& sample, const LaplaceApprox& laplace, const Matrix& q,
                     BvmMode mode, const GaussianBlock& block, Index grid_points = 64,
                     std::optional<Vector> shift = std::nullopt);
BvmReport bvm_errors_on_grid(const PosteriorSample& sample, const LaplaceApprox& laplace,
                             const Matrix& q, const GaussianBlock& block, const Vector& radii,
                             const Vector& shift);
// Default shift of the shifted mode.
Vector default_shift(const LaplaceApprox& laplace);

struct MeanGap {
  double gap = 0.0;  // |Q (mean - theta~)|
  double gap_halfwidth = 0.0;
  double variance_gap = 0.0;  // ||I - D~ Cov D~||
  double variance_halfwidth = 0.0;
};

MeanGap posterior_mean_gap(const PosteriorSample& sample, const FitResult& fit, const Matrix& q);

struct MeanCenteredReport {
  BvmReport bvm;
  double p_tilde_pi = 0.0;    // tr(P D~^2 P D~^{-2} P)
  double commute_gap = 0.0;   // ||D~^2 P - P D~^2||
};

MeanCenteredReport bvm_mean_centered(const PosteriorSample& sample, const LaplaceApprox& laplace,
                                     const Matrix& q, const Matrix& projector,
                                     const GaussianBlock& block, Index grid_points = 64);

// Empirical (1 - alpha) quantile of |Q L^{-T} g| over the block.
double credible_radius(const LaplaceApprox& laplace, const Matrix& q, double alpha,
                       const GaussianBlock& block);
double credible_radius(const LaplaceApprox& laplace, const Matrix& q, double alpha,
                       std::size_t n_mc, RandomSource& rs);
// Exact (1 - alpha) quantile of |diag(sigmas) g| for one or two coordinates.
double credible_radius_exact(const Vector& sigmas, double alpha);

struct ContractionReport {
  double threshold = 0.0;
  double trace = 0.0;  // tr(Q D_G^{-2} Q^T)
  double norm = 0.0;   // ||Q D_G^{-2} Q^T||
  double exceedance = 0.0;
};

// Posterior mass of {|Q(v - center)|^2 > C1 tr + C2 log(n) ||.||}.
ContractionReport contraction_check(const PosteriorSample& sample, const Vector& center,
                                    const Matrix& q, const Matrix& target_precision, double c1,
                                    double c2, double n);

// |Q D_G^{-2} G^2 theta*|^2 / tr(Q D_G^{-2} Q^T).
double bias_variance_ratio(const TruthContext& truth, const Matrix& q);

bool coverage_trial(const Vector& estimate, const Vector& truth, const Matrix& q,
                    double r_alpha);

struct PriorComparison {
  double distance = 0.0;
  double halfwidth = 0.0;
  double delta3 = 0.0;        // r0^3 tau3
  double inverse_n = 0.0;
  double variance_term = 0.0; // tr(Q (D~_G^{-2} - D~_G1^{-2}) Q^T) / ||Q D~_G^{-2} Q^T||_Fr
  double bias_term = 0.0;     // |Q (theta~_G - theta~_G1)|^2 / ||Q D~_G^{-2} Q^T||_Fr
};

// Requires G^2 <= G1^2 coordinatewise (coordinates outside a support count as
// infinite precision); throws OrderingViolated otherwise. The G1 fit and
// sample may live on a smaller support and are zero-padded.
PriorComparison prior_comparison(const FitResult& fit_g, const FitResult& fit_g1,
                                 const PosteriorSample& sample_g,
                                 const PosteriorSample& sample_g1, const Matrix& q, double r0,
                                 double tau3, double n, Index grid_points = 64);

void write_draws(const PosteriorSample& sample, const std::filesystem::path& path);

}  // namespace bvmlab
