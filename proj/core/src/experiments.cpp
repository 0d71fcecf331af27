#include "bvmlab/experiments.hpp"

#include "bvmlab/errors.hpp"
#include "bvmlab/estimation.hpp"
#include "bvmlab/gauss_compare.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/posterior.hpp"
#include "bvmlab/rate_fit.hpp"
#include "bvmlab/tail_bounds.hpp"
#include "bvmlab/version.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace bvmlab {

namespace {

// Stream reserved for experiment-level Gaussian blocks and case generation.
constexpr std::uint64_t kSharedStream = 0xB10C000000000000ULL;

struct RowSink {
  std::string experiment;
  std::vector<ReportRow> rows;

  ReportRow& add(std::optional<Index> rep, double n, std::string prior, std::string metric,
                 double value, double halfwidth = 0.0, std::optional<double> bound = std::nullopt,
                 std::optional<bool> pass = std::nullopt) {
    rows.push_back(ReportRow{experiment, rep, n, std::move(prior), std::move(metric), value,
                             halfwidth, bound, pass});
    check_row(rows.back());
    return rows.back();
  }

  // Aggregate check of value <= bound.
  void check_le(double n, const std::string& prior, const std::string& metric, double value,
                double bound, double halfwidth = 0.0) {
    add(std::nullopt, n, prior, metric, value, halfwidth, bound, value <= bound);
  }
};

std::string fmt(double v) { return format_double(v); }

Matrix upper_factor(const Matrix& spd) { return SpdFactor(spd).lower().transpose(); }

RandomSource shared_source(const ExperimentConfig& c, std::uint64_t tag) {
  return RandomSource(c.seed, kSharedStream).substream(tag);
}

GaussianBlock shared_block(const ExperimentConfig& c, Index size, Index dim, std::uint64_t tag) {
  return GaussianBlock::generate(size, dim, shared_source(c, tag), true);
}

PosteriorSample draw_posterior(const ExperimentConfig& c, const Model& model,
                               const Vector& statistic, const FitResult& fit,
                               const GaussianBlock* block, RandomSource& rs) {
  if (c.sampler == "importance") {
    if (block == nullptr) throw std::logic_error("importance sampling needs a Gaussian block");
    return importance_sample(model, statistic, fit, *block, c.is_draws);
  }
  McmcConfig mc;
  mc.keep = c.chain_keep;
  mc.burn_in = c.chain_burn_in;
  mc.thin = c.chain_thin;
  mc.scale = c.chain_scale;
  return mcmc_sample(model, statistic, fit, mc, rs);
}

void maybe_write_draws(const ExperimentConfig& c, const PosteriorSample& s, double n, Index rep) {
  if (!c.write_draws) return;
  const auto dir = c.out / "draws";
  std::filesystem::create_directories(dir);
  write_draws(s, dir / (c.experiment + "_n" + fmt(n) + "_rep" + std::to_string(rep) + ".csv"));
}

// Runs task(k, rep) over the n grid and replications, collecting rows in
// (n, replication) order and recording the stream of each task.
void replicate(const ExperimentConfig& c, ExperimentResult& result,
               const std::function<std::vector<ReportRow>(Index k, Index rep, RandomSource rs)>& task) {
  const Index grid = static_cast<Index>(c.n_grid.size());
  const Index total = grid * c.replications;
  std::vector<std::vector<ReportRow>> slots(static_cast<std::size_t>(total));
  parallel_for(total, resolve_jobs(c.jobs), [&](Index i) {
    const Index k = i / c.replications;
    const Index rep = i % c.replications;
    const RandomSource rs = RandomSource(c.seed, static_cast<std::uint64_t>(rep))
                                .substream(static_cast<std::uint64_t>(k + 1));
    try {
      slots[static_cast<std::size_t>(i)] = task(k, rep, rs);
    } catch (const std::exception& e) {
      throw Error("replication " + std::to_string(rep) + " at n = " + fmt(c.n_grid[k]) + ": " +
                  e.what());
    }
  });
  for (Index i = 0; i < total; ++i) {
    const Index k = i / c.replications;
    const Index rep = i % c.replications;
    result.seeds.push_back(ReplicationSeed{rep, c.n_grid[k], c.seed,
                                           static_cast<std::uint64_t>(rep),
                                           static_cast<std::uint64_t>(k + 1)});
    auto& rows = slots[static_cast<std::size_t>(i)];
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
}

std::vector<double> metric_values(const std::vector<ReportRow>& rows, const std::string& metric,
                                  double n) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.replication && r.metric == metric && r.n == n) out.push_back(r.value);
  }
  return out;
}

std::vector<double> halfwidths(const std::vector<ReportRow>& rows, const std::string& metric,
                               double n) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.replication && r.metric == metric && r.n == n) out.push_back(r.mc_halfwidth);
  }
  return out;
}

// Slope row: |slope - target| <= tolerance, or slope <= target when tolerance is empty.
void slope_check(ExperimentResult& result, RowSink& sink, const std::vector<ReportRow>& rows,
                 const std::string& metric, const std::string& prior, double target,
                 std::optional<double> tolerance, bool gated = true) {
  RateFit fit;
  try {
    fit = rate_fit(rows, metric);
  } catch (const InsufficientData& e) {
    result.skipped.push_back("slope." + metric + ": " + e.what());
    return;
  }
  std::optional<bool> pass;
  if (gated) {
    pass = tolerance ? std::abs(fit.slope - target) <= *tolerance : fit.slope <= target;
  }
  sink.add(std::nullopt, 0.0, prior, "slope." + metric, fit.slope, fit.standard_error, target, pass);
}

// ---------------------------------------------------------------------------

void run_validate_bounds(const ExperimentConfig& c, ExperimentResult& result, RowSink& sink) {
  const std::vector<double> xs{0.5, 1.0, 2.0, 3.0};
  const std::vector<Index> dims{1, 5, 20};
  const auto draws = static_cast<std::size_t>(c.mc_draws);
  const double nd = static_cast<double>(c.mc_draws);

  // Tail validity for Gaussian and Rademacher quadratic forms.
  struct TailCase {
    Index p;
    NoiseFamily family;
    std::vector<TailCheck> checks;
  };
  std::vector<TailCase> cases;
  for (Index p : dims) {
    for (NoiseFamily f : {NoiseFamily::gaussian, NoiseFamily::rademacher}) {
      cases.push_back({p, f, {}});
    }
  }
  parallel_for(static_cast<Index>(cases.size()), resolve_jobs(c.jobs), [&](Index i) {
    auto& tc = cases[static_cast<std::size_t>(i)];
    RandomSource rs = shared_source(c, 0x7A11000 + static_cast<std::uint64_t>(i));
    tc.checks = mc_tail_validate(Matrix::Identity(tc.p, tc.p), xs, draws, rs, tc.family);
  });
  Index tail_failures = 0;
  Index oracle_failures = 0;
  Index chi2_failures = 0;
  for (const auto& tc : cases) {
    const std::string fam = tc.family == NoiseFamily::gaussian ? "gaussian" : "rademacher";
    const std::string id = "I" + std::to_string(tc.p) + "-" + fam;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const TailCheck& t = tc.checks[k];
      const std::string tag = fam + ".p" + std::to_string(tc.p) + ".x" + fmt(xs[k]);
      const double hw = 2.0 * std::sqrt(t.empirical * (1.0 - t.empirical) / nd);
      sink.add(std::nullopt, nd, "-", "tail." + tag, t.empirical, hw, t.tolerance, t.passed);
      result.bounds.push_back(
          BoundsRow{id, xs[k], t.z, t.empirical, t.tolerance, t.tolerance - t.empirical, t.passed});
      if (!t.passed) ++tail_failures;
      if (tc.family == NoiseFamily::gaussian) {
        const double exact = chi_square_upper_tail(static_cast<double>(tc.p), t.z * t.z);
        const double band = 4.0 * std::sqrt(exact * (1.0 - exact) / nd);
        const bool ok = std::abs(t.empirical - exact) <= band && exact <= t.bound;
        sink.add(std::nullopt, nd, "-", "tail_exact." + tag, exact, band, t.bound, ok);
        if (!ok) ++oracle_failures;
      }
    }
    if (tc.family == NoiseFamily::gaussian) {
      for (double x : xs) {
        const ChiSquareCheck cs = chi_square_bounds_check(static_cast<double>(tc.p), x);
        const double worst = std::max({cs.upper_square, cs.upper_norm, cs.lower_square});
        sink.add(std::nullopt, 0.0, "-", "chi2.p" + std::to_string(tc.p) + ".x" + fmt(x), worst,
                 0.0, cs.bound, cs.passed);
        if (!cs.passed) ++chi2_failures;
      }
    }
  }
  sink.check_le(nd, "-", "tail_validity_failures", static_cast<double>(tail_failures), 0.0);
  sink.check_le(nd, "-", "tail_chi2_oracle_failures",
                static_cast<double>(oracle_failures + chi2_failures), 0.0);

  // Exponential-tail crossing.
  double worst_residual = 0.0;
  double worst_jump = 0.0;
  for (Index p : {1, 4, 16}) {
    for (double g : {10.0, 20.0, 100.0, 1000.0}) {
      const ExpTailSpec e = solve_exp_tail(TailSpec::identity(p), g);
      const double jump = e.g_c / e.mu_c - z_quantile(e.base, e.x_c);
      const std::string tag = "exp_tail.p" + std::to_string(p) + ".g" + fmt(g);
      sink.add(std::nullopt, 0.0, "-", tag + ".residual", e.residual, 0.0, 1e-10,
               e.residual < 1e-10);
      sink.add(std::nullopt, 0.0, "-", tag + ".jump", jump, 0.0, 1.0,
               std::abs(jump - 1.0) <= 1e-6);
      sink.add(std::nullopt, 0.0, "-", tag + ".x_c", e.x_c);
      sink.add(std::nullopt, 0.0, "-", tag + ".exp_minus_x_c", std::exp(-e.x_c));
      worst_residual = std::max(worst_residual, e.residual);
      worst_jump = std::max(worst_jump, std::abs(jump - 1.0));
    }
  }
  sink.add(std::nullopt, 0.0, "-", "exp_tail_max_residual", worst_residual, 0.0, 1e-10,
           worst_residual < 1e-10);
  sink.check_le(0.0, "-", "exp_tail_max_jump_error", worst_jump, 1e-6);
  const ExpTailSpec big = solve_exp_tail(TailSpec::identity(4), 1e6);
  sink.add(std::nullopt, 0.0, "-", "exp_tail_large_g_x_c", big.x_c, 0.0, 1e4, big.x_c > 1e4);

  // Gaussian norm comparison on random pairs.
  struct Pair {
    GaussComparisonCase cc;
    bool identical = false;
    double bound = 0.0;
    double mc = 0.0;
  };
  std::vector<Pair> pairs;
  RandomSource gen = shared_source(c, 0xC0A1);
  auto spd = [&](Index d) {
    Matrix a(d, d);
    gen.fill_normal(a);
    return Matrix(a * a.transpose() / static_cast<double>(d) + 0.5 * Matrix::Identity(d, d));
  };
  auto shift = [&](Index d) {
    Vector a = gen.gaussian_vector(d);
    return Vector(a.normalized() * (0.3 + 0.7 * gen.uniform()));
  };
  for (Index i = 0; i < 20; ++i) {
    const Index d = 3 + (i % 10);
    Pair pr;
    if (i < 10) {
      Vector lx(d);
      Vector le(d);
      for (Index j = 0; j < d; ++j) {
        lx[j] = 0.5 + 1.5 * gen.uniform();
        le[j] = lx[j] * (1.0 + 0.1 + 0.3 * gen.uniform());
      }
      pr.cc = {lx.asDiagonal(), le.asDiagonal(), shift(d)};
    } else {
      const Matrix sx = spd(d);
      Matrix b(d, d);
      gen.fill_normal(b);
      const Matrix se = sx + 0.2 * b * b.transpose() / static_cast<double>(d);
      pr.cc = {sx, se, shift(d)};
    }
    pairs.push_back(std::move(pr));
  }
  for (Index d : {3, 8}) {
    Pair pr;
    const Matrix s = spd(d);
    pr.cc = {s, s, Vector::Zero(d)};
    pr.identical = true;
    pairs.push_back(std::move(pr));
  }
  parallel_for(static_cast<Index>(pairs.size()), resolve_jobs(c.jobs), [&](Index i) {
    auto& pr = pairs[static_cast<std::size_t>(i)];
    pr.bound = comparison_bound(pr.cc).value;
    RandomSource rs = shared_source(c, 0xC0B0 + static_cast<std::uint64_t>(i));
    pr.mc = mc_norm_kolmogorov(pr.cc, static_cast<std::size_t>(c.compare_draws), rs);
  });
  const double ncmp = static_cast<double>(c.compare_draws);
  double max_ratio = 0.0;
  double max_identical_bound = 0.0;
  double max_identical_mc = 0.0;
  Index case_index = 0;
  Index identical_index = 0;
  for (const auto& pr : pairs) {
    if (pr.identical) {
      const std::string tag = "compare.identical" + std::to_string(identical_index++);
      sink.add(std::nullopt, ncmp, "-", tag + ".bound", pr.bound, 0.0, 0.0, pr.bound == 0.0);
      sink.add(std::nullopt, ncmp, "-", tag + ".mc", pr.mc, 0.0, 6.0 / std::sqrt(ncmp),
               pr.mc <= 6.0 / std::sqrt(ncmp));
      max_identical_bound = std::max(max_identical_bound, pr.bound);
      max_identical_mc = std::max(max_identical_mc, pr.mc);
      continue;
    }
    const std::string tag = "compare.case" + std::to_string(case_index++);
    const double ratio = pr.mc / pr.bound;
    sink.add(std::nullopt, ncmp, "-", tag + ".mc", pr.mc);
    sink.add(std::nullopt, ncmp, "-", tag + ".bound", pr.bound);
    sink.add(std::nullopt, ncmp, "-", tag + ".ratio", ratio, 0.0, 3.0, ratio <= 3.0);
    max_ratio = std::max(max_ratio, ratio);
  }
  sink.check_le(ncmp, "-", "compare_max_ratio", max_ratio, 3.0);
  sink.check_le(ncmp, "-", "compare_identical_bound", max_identical_bound, 0.0);
  sink.check_le(ncmp, "-", "compare_identical_mc", max_identical_mc, 6.0 / std::sqrt(ncmp));
}

// ---------------------------------------------------------------------------

void run_surrogate(const ExperimentConfig& c, ExperimentResult& result, RowSink& sink) {
  const double n = c.n_grid.front();
  const Index d = c.surrogate_dim;
  const PriorSpec prior = c.prior_for(n);
  const std::string pd = prior.descriptor();
  const Vector g2 = leading(prior.precision_diagonal(d), d);
  const GaussianSurrogateModel model(static_cast<std::size_t>(n), d);
  const Vector truth = sobolev_truth(d, c.s_star, c.radius2);
  const RandomSource rs(c.seed, 0);
  result.seeds.push_back(ReplicationSeed{0, n, c.seed, 0, 0});

  RandomSource data_rs = rs.substream(1);
  const Dataset data = model.sample(truth, data_rs);
  const Vector stat = model.statistic(data);
  const FitResult fit = fit_pmle(model, stat, g2, Vector::Zero(d));
  const Vector ridge = stat.array() / (n + g2.array());
  sink.check_le(n, pd, "pmle_vs_ridge", (fit.theta - ridge).cwiseAbs().maxCoeff(), 1e-8);

  TargetOptions topt;
  topt.nu0_sq = c.nu0_sq;
  const TruthContext ctx = fit_target(model, g2, truth, topt);
  const Vector target = n * truth.array() / (n + g2.array());
  sink.check_le(n, pd, "target_vs_closed_form", (ctx.target - target).cwiseAbs().maxCoeff(), 1e-8);
  const Vector sc = score(ctx, stat);
  sink.check_le(n, pd, "fisher_residual", fisher_expansion_residual(fit, ctx, sc), 1e-8);
  const WilksResiduals w = wilks_residual(model, stat, fit, ctx, sc);
  sink.check_le(n, pd, "wilks_residual", w.wilks, 1e-8);
  sink.check_le(n, pd, "wilks_variant", w.variant, 1e-8);

  RandomSource tau_rs = rs.substream(3);
  const auto probes = tau_probes(ctx, fit.theta, 4, tau_rs);
  const double tau3 = tau_k(model, probes, ctx.h2, ctx.r_g, 3, 64, tau_rs).value;
  const double tau4 = tau_k(model, probes, ctx.h2, ctx.r_g, 4, 64, tau_rs).value;
  sink.check_le(n, pd, "tau3", tau3, 1e-8);
  sink.check_le(n, pd, "tau4", tau4, 1e-8);

  // Random-walk chain against the closed-form posterior.
  RandomSource chain_rs = rs.substream(2);
  McmcConfig mc;
  mc.keep = c.chain_keep;
  mc.burn_in = c.chain_burn_in;
  mc.thin = c.chain_thin;
  mc.scale = c.chain_scale;
  const PosteriorSample chain = mcmc_sample(model, stat, fit, mc, chain_rs);
  maybe_write_draws(c, chain, n, 0);
  const Matrix post_cov = (1.0 / (n + g2.array())).matrix().asDiagonal();
  const MomentCheck mom = chain_moment_check(chain, ridge, post_cov);
  sink.add(std::nullopt, n, pd, "chain_acceptance", chain.acceptance_rate);
  sink.add(std::nullopt, n, pd, "chain_split_rhat", chain.split_rhat);
  sink.add(std::nullopt, n, pd, "chain_ess", chain.ess);
  sink.check_le(n, pd, "chain_mean_z", mom.max_mean_z, 4.0);
  sink.check_le(n, pd, "chain_cov_z", mom.max_cov_z, 4.0);

  const GaussianBlock block = shared_block(c, c.mc_draws, d, 1);
  const LaplaceApprox lap = laplace(fit);
  const Matrix q = upper_factor(fit.precision);
  const BvmReport sym = bvm_errors(chain, lap, q, BvmMode::symmetric, block, c.grid_points);
  const BvmReport shf = bvm_errors(chain, lap, q, BvmMode::shifted, block, c.grid_points);
  sink.check_le(n, pd, "bvm_symmetric", sym.error, 0.02, sym.halfwidth);
  sink.add(std::nullopt, n, pd, "bvm_shifted", shf.error, shf.halfwidth);
  const MeanCenteredReport mcr =
      bvm_mean_centered(chain, lap, q, Matrix::Identity(d, d), block, c.grid_points);
  sink.check_le(n, pd, "bvm_mean_centered", mcr.bvm.error, 0.02, mcr.bvm.halfwidth);
  sink.add(std::nullopt, n, pd, "p_tilde_pi", mcr.p_tilde_pi, 0.0, static_cast<double>(d),
           std::abs(mcr.p_tilde_pi - static_cast<double>(d)) <= 1e-8);

  const MeanGap gap = posterior_mean_gap(chain, fit, q);
  sink.check_le(n, pd, "mean_gap", gap.gap, 2.0 * gap.gap_halfwidth, gap.gap_halfwidth);
  sink.check_le(n, pd, "variance_gap", gap.variance_gap, 0.05, gap.variance_halfwidth);

  // Concentration ratio with H = D~, where the exact value is a chi-square ratio.
  const double x = 2.0 * std::log(n);
  const double r0 = select_r0(static_cast<double>(d), x, 1.0);
  const RhoEstimate rho = rho_hat(chain, fit, fit.precision, r0, static_cast<double>(d), x, 0.0);
  const double tail = chi_square_upper_tail(static_cast<double>(d), r0 * r0);
  sink.add(std::nullopt, n, pd, "rho_exact", tail / (1.0 - tail));
  sink.check_le(n, pd, "rho", rho.rho, rho.bound);

  // Contraction around the truth with Q = D_G; exact mass from a noncentral chi-square.
  const Matrix qg = upper_factor(ctx.precision);
  const ContractionReport cr = contraction_check(chain, truth, qg, ctx.precision, c.c1, c.c2, n);
  const double lambda = (qg * (fit.theta - truth)).squaredNorm();
  const double exact = boost::math::cdf(boost::math::complement(
      boost::math::non_central_chi_squared_distribution<double>(static_cast<double>(d), lambda),
      cr.threshold));
  sink.add(std::nullopt, n, pd, "contraction_exact", exact);
  sink.check_le(n, pd, "contraction_exceedance", cr.exceedance, 0.05);
}

// ---------------------------------------------------------------------------

void run_expansion_rates(const ExperimentConfig& c, ExperimentResult& result, RowSink& sink) {
  const Vector truth = sobolev_truth(c.p_max, c.s_star, c.radius2);
  struct Level {
    std::unique_ptr<Model> model;
    PriorSpec prior;
    Vector g2;
    TruthContext ctx;
  };
  std::vector<Level> levels;
  for (double n : c.n_grid) {
    Level lv;
    lv.prior = c.prior_for(n);
    const Index d = lv.prior.support_dim(c.p_max);
    lv.model = make_model(c.model, static_cast<std::size_t>(n), d,
                          static_cast<std::size_t>(c.quadrature_nodes));
    lv.g2 = lv.prior.precision_diagonal(c.p_max);
    TargetOptions topt;
    topt.nu0_sq = c.nu0_sq;
    lv.ctx = fit_target(*lv.model, lv.g2, truth, topt);
    levels.push_back(std::move(lv));
  }
  std::map<Index, GaussianBlock> blocks;
  if (c.sampler == "importance") {
    for (const auto& lv : levels) {
      const Index d = lv.model->dim();
      if (!blocks.count(d)) blocks.emplace(d, shared_block(c, c.is_draws, d, 2));
    }
  }
  replicate(c, result, [&](Index k, Index rep, RandomSource rs) {
    const Level& lv = levels[static_cast<std::size_t>(k)];
    const double n = c.n_grid[static_cast<std::size_t>(k)];
    const std::string pd = lv.prior.descriptor();
    RandomSource data_rs = rs.substream(1);
    RandomSource chain_rs = rs.substream(2);
    const Dataset data = lv.model->sample(truth, data_rs);
    const Vector stat = lv.model->statistic(data);
    const FitResult fit = fit_pmle(*lv.model, stat, lv.g2, Vector::Zero(lv.model->dim()));
    const Vector sc = score(lv.ctx, stat);
    const WilksResiduals w = wilks_residual(*lv.model, stat, fit, lv.ctx, sc);
    const auto it = blocks.find(lv.model->dim());
    const PosteriorSample post = draw_posterior(c, *lv.model, stat, fit,
                                                it == blocks.end() ? nullptr : &it->second, chain_rs);
    maybe_write_draws(c, post, n, rep);
    const MeanGap gap = posterior_mean_gap(post, fit, upper_factor(fit.precision));
    RowSink s{c.experiment, {}};
    s.add(rep, n, pd, "fisher_residual", fisher_expansion_residual(fit, lv.ctx, sc));
    s.add(rep, n, pd, "wilks_residual", w.wilks);
    s.add(rep, n, pd, "wilks_variant", w.variant);
    s.add(rep, n, pd, "operator_gap", w.operator_gap);
    s.add(rep, n, pd, "mean_gap", gap.gap, gap.gap_halfwidth);
    s.add(rep, n, pd, "variance_gap", gap.variance_gap, gap.variance_halfwidth);
    s.add(rep, n, pd, "posterior_ess", post.ess);
    const double p_target = effective_dimension(lv.model->fisher(lv.ctx.target), lv.g2, lv.ctx.h2);
    const double p_fit = effective_dimension(lv.model->fisher(fit.theta), lv.g2, lv.ctx.h2);
    s.add(rep, n, pd, "effdim_relative_gap", std::abs(p_fit - p_target) / p_target);
    return s.rows;
  });
  const std::string pd = levels.front().prior.descriptor();
  double max_gap = 0.0;
  for (double n : c.n_grid) {
    for (double v : metric_values(result.rows, "effdim_relative_gap", n)) max_gap = std::max(max_gap, v);
  }
  sink.check_le(0.0, pd, "max_effdim_relative_gap", max_gap, 0.2);
  for (const std::string metric : {"fisher_residual", "wilks_residual", "mean_gap"}) {
    for (double n : c.n_grid) {
      sink.add(std::nullopt, n, pd, "median." + metric, median(metric_values(result.rows, metric, n)));
    }
  }
  std::vector<ReportRow> all = result.rows;
  slope_check(result, sink, all, "fisher_residual", pd, -0.5, 0.15);
  slope_check(result, sink, all, "wilks_residual", pd, -0.5, 0.15);
  slope_check(result, sink, all, "mean_gap", pd, -0.5, 0.2);
}

// ---------------------------------------------------------------------------

void run_bvm_rates(const ExperimentConfig& c, ExperimentResult& result, RowSink& sink) {
  const Vector truth = sobolev_truth(c.p_max, c.s_star, c.radius2);
  std::vector<std::unique_ptr<Model>> models;
  std::vector<PriorSpec> priors;
  for (double n : c.n_grid) {
    priors.push_back(c.prior_for(n));
    models.push_back(make_model(c.model, static_cast<std::size_t>(n),
                                priors.back().support_dim(c.p_max),
                                static_cast<std::size_t>(c.quadrature_nodes)));
  }
  const Index block_size = c.sampler == "importance" ? c.is_draws : c.mc_draws;
  std::map<Index, GaussianBlock> blocks;
  for (const auto& m : models) {
    if (!blocks.count(m->dim())) blocks.emplace(m->dim(), shared_block(c, block_size, m->dim(), 3));
  }
  replicate(c, result, [&](Index k, Index rep, RandomSource rs) {
    const Model& model = *models[static_cast<std::size_t>(k)];
    const PriorSpec& prior = priors[static_cast<std::size_t>(k)];
    const double n = c.n_grid[static_cast<std::size_t>(k)];
    const std::string pd = prior.descriptor();
    const Vector g2 = prior.precision_diagonal(c.p_max);
    RandomSource data_rs = rs.substream(1);
    RandomSource chain_rs = rs.substream(2);
    const Dataset data = model.sample(truth, data_rs);
    const Vector stat = model.statistic(data);
    const FitResult fit = fit_pmle(model, stat, g2, Vector::Zero(model.dim()));
    const GaussianBlock& block = blocks.at(model.dim());
    const PosteriorSample post = draw_posterior(c, model, stat, fit, &block, chain_rs);
    maybe_write_draws(c, post, n, rep);
    const LaplaceApprox lap = laplace(fit);
    const Matrix q = upper_factor(fit.precision);
    const BvmReport sym = bvm_errors(post, lap, q, BvmMode::symmetric, block, c.grid_points);
    const BvmReport shf = bvm_errors(post, lap, q, BvmMode::shifted, block, c.grid_points);
    RowSink s{c.experiment, {}};
    s.add(rep, n, pd, "bvm_symmetric", sym.error, sym.halfwidth);
    s.add(rep, n, pd, "bvm_shifted", shf.error, shf.halfwidth);
    s.add(rep, n, pd, "posterior_ess", post.ess);
    return s.rows;
  });
  double worst_sym_increase = -std::numeric_limits<double>::infinity();
  double worst_shift_increase = -std::numeric_limits<double>::infinity();
  std::optional<double> prev_sym;
  std::optional<double> prev_shift;
  for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
    const double n = c.n_grid[k];
    const std::string pd = priors[k].descriptor();
    const double ms = median(metric_values(result.rows, "bvm_symmetric", n));
    const double mh = median(metric_values(result.rows, "bvm_shifted", n));
    const double hs = median(halfwidths(result.rows, "bvm_symmetric", n));
    const double hh = median(halfwidths(result.rows, "bvm_shifted", n));
    sink.add(std::nullopt, n, pd, "median.bvm_symmetric", ms, hs);
    sink.add(std::nullopt, n, pd, "median.bvm_shifted", mh, hh);
    sink.check_le(n, pd, "ordering", ms - mh, hs + hh);
    if (prev_sym) {
      worst_sym_increase = std::max(worst_sym_increase, ms - *prev_sym);
      worst_shift_increase = std::max(worst_shift_increase, mh - *prev_shift);
    }
    prev_sym = ms;
    prev_shift = mh;
  }
  const std::string pd = priors.front().descriptor();
  if (c.n_grid.size() > 1) {
    sink.check_le(0.0, pd, "monotone.bvm_symmetric", worst_sym_increase, 0.0);
    sink.check_le(0.0, pd, "monotone.bvm_shifted", worst_shift_increase, 0.0);
  }
  std::vector<ReportRow> all = result.rows;
  slope_check(result, sink, all, "bvm_shifted", pd, -0.3, std::nullopt);
  slope_check(result, sink, all, "bvm_symmetric", pd, -1.0, std::nullopt, false);
}

// ---------------------------------------------------------------------------

void run_coverage(const ExperimentConfig& c, ExperimentResult& result, RowSink& sink) {
  const double alpha = c.alpha;

  // Exact pivot: Gaussian sequence model with a flat prior and Q = sqrt(n) I.
  {
    const double n = c.n_grid.front();
    const Index d = c.surrogate_dim;
    const GaussianSurrogateModel model(static_cast<std::size_t>(n), d);
    const Vector truth = sobolev_truth(d, c.s_star, c.radius2);
    const Vector g2 = Vector::Zero(d);
    const Matrix q = std::sqrt(n) * Matrix::Identity(d, d);
    const FitResult center = fit_pmle(model, model.expected_statistic(truth), g2, Vector::Zero(d));
    const GaussianBlock block = shared_block(c, c.radius_draws, d, 4);
    const double r_alpha = credible_radius(laplace(center), q, alpha, block);
    std::vector<int> covered(static_cast<std::size_t>(c.pivot_trials));
    parallel_for(c.pivot_trials, resolve_jobs(c.jobs), [&](Index t) {
      RandomSource rs = RandomSource(c.seed, static_cast<std::uint64_t>(t)).substream(0x9170);
      const Dataset data = model.sample(truth, rs);
      const FitResult fit = fit_pmle(model, model.statistic(data), g2, Vector::Zero(d));
      covered[static_cast<std::size_t>(t)] = coverage_trial(fit.theta, truth, q, r_alpha) ? 1 : 0;
    });
    double hits = 0.0;
    for (Index t = 0; t < c.pivot_trials; ++t) {
      result.seeds.push_back(ReplicationSeed{t, n, c.seed, static_cast<std::uint64_t>(t), 0x9170});
      sink.add(t, n, "flat", "pivot_covered", covered[static_cast<std::size_t>(t)]);
      hits += covered[static_cast<std::size_t>(t)];
    }
    const double trials = static_cast<double>(c.pivot_trials);
    const double rate = hits / trials;
    const double band = 3.0 * std::sqrt(alpha * (1.0 - alpha) / trials);
    sink.add(std::nullopt, n, "flat", "pivot_radius", r_alpha);
    sink.add(std::nullopt, n, "flat", "pivot_coverage", rate, band, 1.0 - alpha,
             std::abs(rate - (1.0 - alpha)) <= band);
  }

  // Undersmoothed GLM: ambient norm with Q = sqrt(n) I on p_max coordinates.
  const Vector truth = sobolev_truth(c.p_max, c.s_star, c.radius2);
  for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
    const double n = c.n_grid[k];
    const PriorSpec prior = c.prior_for(n);
    const std::string pd = prior.descriptor();
    const Index d = prior.support_dim(c.p_max);
    const auto model = make_model(c.model, static_cast<std::size_t>(n), d,
                                  static_cast<std::size_t>(c.quadrature_nodes));
    const Vector g2 = prior.precision_diagonal(c.p_max);
    TargetOptions topt;
    topt.nu0_sq = c.nu0_sq;
    const TruthContext ctx = fit_target(*model, g2, truth, topt);
    const Matrix q_support = std::sqrt(n) * Matrix::Identity(d, d);
    const Matrix q_ambient = std::sqrt(n) * Matrix::Identity(c.p_max, c.p_max);
    const GaussianBlock block = shared_block(c, c.radius_draws, d, 5);
    std::vector<std::pair<int, double>> out(static_cast<std::size_t>(c.replications));
    parallel_for(c.replications, resolve_jobs(c.jobs), [&](Index rep) {
      RandomSource rs = RandomSource(c.seed, static_cast<std::uint64_t>(rep))
                            .substream(static_cast<std::uint64_t>(k + 1));
      try {
        const Dataset data = model->sample(truth, rs);
        const FitResult fit = fit_pmle(*model, model->statistic(data), g2, Vector::Zero(d));
        const double r_alpha = credible_radius(laplace(fit), q_support, alpha, block);
        const bool hit = coverage_trial(leading(fit.theta, c.p_max), truth, q_ambient, r_alpha);
        out[static_cast<std::size_t>(rep)] = {hit ? 1 : 0, r_alpha};
      } catch (const std::exception& e) {
        throw Error("replication " + std::to_string(rep) + " at n = " + fmt(n) + ": " + e.what());
      }
    });
    double hits = 0.0;
    for (Index rep = 0; rep < c.replications; ++rep) {
      const auto& [hit, radius] = out[static_cast<std::size_t>(rep)];
      result.seeds.push_back(ReplicationSeed{rep, n, c.seed, static_cast<std::uint64_t>(rep),
                                             static_cast<std::uint64_t>(k + 1)});
      sink.add(rep, n, pd, "covered", hit);
      sink.add(rep, n, pd, "credible_radius", radius);
      hits += hit;
    }
    const double reps = static_cast<double>(c.replications);
    const double rate = hits / reps;
    const double se = std::sqrt(alpha * (1.0 - alpha) / reps);
    sink.add(std::nullopt, n, pd, "bias_variance_ratio",
             bias_variance_ratio(ctx, q_support));
    sink.add(std::nullopt, n, pd, "off_support_bias",
             std::sqrt(n) * truth.tail(c.p_max - d).norm());
    sink.add(std::nullopt, n, pd, "coverage", rate, 2.0 * se, 1.0 - alpha - 2.0 * se,
             rate >= 1.0 - alpha - 2.0 * se);
  }
}

// ---------------------------------------------------------------------------

void run_contraction(const ExperimentConfig& c, ExperimentResult& result, RowSink& sink) {
  const Vector truth = sobolev_truth(c.p_max, c.s_star, c.radius2);
  for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
    const double n = c.n_grid[k];
    const PriorSpec prior = c.prior_for(n);
    const std::string pd = prior.descriptor();
    const Index d = prior.support_dim(c.p_max);
    const auto model = make_model(c.model, static_cast<std::size_t>(n), d,
                                  static_cast<std::size_t>(c.quadrature_nodes));
    const Vector g2 = prior.precision_diagonal(c.p_max);
    TargetOptions topt;
    topt.nu0_sq = c.nu0_sq;
    const TruthContext ctx = fit_target(*model, g2, truth, topt);
    const Matrix q = upper_factor(ctx.h2);
    std::optional<GaussianBlock> block;
    if (c.sampler == "importance") block = shared_block(c, c.is_draws, d, 6);
    std::vector<std::vector<ReportRow>> slots(static_cast<std::size_t>(c.replications));
    parallel_for(c.replications, resolve_jobs(c.jobs), [&](Index rep) {
      RandomSource rs = RandomSource(c.seed, static_cast<std::uint64_t>(rep))
                            .substream(static_cast<std::uint64_t>(k + 1));
      try {
        RandomSource data_rs = rs.substream(1);
        RandomSource chain_rs = rs.substream(2);
        const Dataset data = model->sample(truth, data_rs);
        const Vector stat = model->statistic(data);
        const FitResult fit = fit_pmle(*model, stat, g2, Vector::Zero(d));
        const PosteriorSample post =
            draw_posterior(c, *model, stat, fit, block ? &*block : nullptr, chain_rs);
        maybe_write_draws(c, post, n, rep);
        const ContractionReport cr =
            contraction_check(post, ctx.parametric, q, ctx.precision, c.c1, c.c2, n);
        RowSink s{c.experiment, {}};
        s.add(rep, n, pd, "exceedance", cr.exceedance, 0.0, 0.05, cr.exceedance <= 0.05);
        s.add(rep, n, pd, "chain_acceptance", post.acceptance_rate);
        slots[static_cast<std::size_t>(rep)] = std::move(s.rows);
      } catch (const std::exception& e) {
        throw Error("replication " + std::to_string(rep) + " at n = " + fmt(n) + ": " + e.what());
      }
    });
    double ok = 0.0;
    for (Index rep = 0; rep < c.replications; ++rep) {
      result.seeds.push_back(ReplicationSeed{rep, n, c.seed, static_cast<std::uint64_t>(rep),
                                             static_cast<std::uint64_t>(k + 1)});
      for (const auto& r : slots[static_cast<std::size_t>(rep)]) {
        if (r.metric == "exceedance" && r.pass.value_or(false)) ok += 1.0;
        sink.rows.push_back(r);
      }
    }
    const Matrix cov = q * SpdFactor(ctx.precision).solve(Matrix(q.transpose()));
    sink.add(std::nullopt, n, pd, "trace_term", cov.trace());
    sink.add(std::nullopt, n, pd, "norm_term", symmetric_norm(0.5 * (cov + cov.transpose())));
    sink.check_le(n, pd, "bias_variance_ratio", bias_variance_ratio(ctx, q), 1.0);
    const double frac = ok / static_cast<double>(c.replications);
    sink.add(std::nullopt, n, pd, "exceedance_pass_fraction", frac, 0.0, 0.95, frac >= 0.95);
  }
}

// ---------------------------------------------------------------------------

void run_effdim(const ExperimentConfig& c, ExperimentResult&, RowSink& sink) {
  // Sandwich checks with F from the log-density model and H^2 = F.
  const double n0 = 1000.0;
  const Index p = 32;
  const LogDensityModel model(static_cast<std::size_t>(n0), p,
                              static_cast<std::size_t>(c.quadrature_nodes));
  const Vector truth = sobolev_truth(p, 1.0, c.radius2);
  struct Case {
    PriorSpec prior;
    double scale;  // theta = scale * truth
  };
  const std::vector<Case> cases = {
      {PriorSpec::truncation(4), 0.0},        {PriorSpec::truncation(8), 1.0},
      {PriorSpec::truncation(16), 1.0},       {PriorSpec::truncation(12), 2.0},
      {PriorSpec::truncation(32), 1.0},       {PriorSpec::smooth(1.0, 1.0), 1.0},
      {PriorSpec::smooth(1.0, 10.0), 0.0},    {PriorSpec::smooth(2.0, 1.0), 1.0},
      {PriorSpec::smooth(2.0, 100.0), 2.0},   {PriorSpec::smooth(1.5, 5.0, 24), 1.0},
  };
  Index failures = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Index d = cases[i].prior.support_dim(p);
    const Matrix full = model.fisher(cases[i].scale * truth);
    const Matrix f = full.topLeftCorner(d, d);
    const SandwichReport r = dimension_sandwich_check(f, cases[i].prior, f, n0);
    const std::string tag = "sandwich.case" + std::to_string(i);
    sink.add(std::nullopt, n0, cases[i].prior.descriptor(), tag + ".lower", r.lower);
    sink.add(std::nullopt, n0, cases[i].prior.descriptor(), tag, r.p_g, 0.0, r.upper, r.passed);
    if (!r.passed) ++failures;
  }
  sink.check_le(n0, "-", "sandwich_failures", static_cast<double>(failures), 0.0);

  // m = w = n^{1/(2s+1)}: truncation at floor(m) gated, smoothing prior reported.
  Index range_failures = 0;
  for (double n : c.n_grid) {
    for (double s : {1.0, 2.0}) {
      double m = std::pow(n, 1.0 / (2.0 * s + 1.0));
      if (std::abs(m - std::round(m)) < 1e-9 * m) m = std::round(m);
      const auto level = static_cast<Index>(std::floor(m));
      const PriorSpec trunc = PriorSpec::truncation(level);
      const Matrix f = n * Matrix::Identity(level, level);
      const double pg = effective_dimension(f, trunc.precision_diagonal(level), f);
      const bool ok = pg >= 0.2 * m && pg <= m;
      sink.add(std::nullopt, n, trunc.descriptor(), "effdim.s" + fmt(s), pg, 0.0, m, ok);
      if (!ok) ++range_failures;
      const PriorSpec smooth = PriorSpec::smooth(s, m);
      const Matrix fa = n * Matrix::Identity(c.p_max, c.p_max);
      sink.add(std::nullopt, n, smooth.descriptor(), "effdim_smooth.s" + fmt(s),
               effective_dimension(fa, smooth.precision_diagonal(c.p_max), fa), 0.0, m);
    }
  }
  sink.check_le(0.0, "-", "effdim_range_failures", static_cast<double>(range_failures), 0.0);
}

// ---------------------------------------------------------------------------

// sup over a fine radius grid of |P(|N(mu, s1 I)| <= r) - P(|N(0, s2 I)| <= r)|
// in d dimensions, via chi-square laws of the squared norms.
double exact_prior_distance(Index d, double shift_sq, double s1, double s2) {
  namespace bm = boost::math;
  const double df = static_cast<double>(d);
  const bm::chi_squared_distribution<double> central(df);
  auto pa = [&](double r) {
    const double t = r * r / s1;
    if (shift_sq / s1 <= 0.0) return bm::cdf(central, t);
    return bm::cdf(bm::non_central_chi_squared_distribution<double>(df, shift_sq / s1), t);
  };
  auto pb = [&](double r) { return bm::cdf(central, r * r / s2); };
  const double hi = 3.0 * (std::sqrt(shift_sq) + std::sqrt(std::max(s1, s2) * (df + 10.0)));
  double best = 0.0;
  for (int i = 1; i <= 4000; ++i) {
    const double r = hi * i / 4000.0;
    best = std::max(best, std::abs(pa(r) - pb(r)));
  }
  return best;
}

void run_prior_compare(const ExperimentConfig& c, ExperimentResult& result, RowSink& sink) {
  const double n = c.n_grid.front();
  const Index d = c.surrogate_dim;
  const GaussianSurrogateModel model(static_cast<std::size_t>(n), d);
  const Vector truth = sobolev_truth(d, c.s_star, c.radius2);
  const RandomSource rs(c.seed, 0);
  result.seeds.push_back(ReplicationSeed{0, n, c.seed, 0, 0});
  RandomSource data_rs = rs.substream(1);
  const Dataset data = model.sample(truth, data_rs);
  const Vector stat = model.statistic(data);
  const GaussianBlock block_a = shared_block(c, c.is_draws, d, 7);
  const GaussianBlock block_b = shared_block(c, c.is_draws, d, 8);

  const Vector g2_flat = Vector::Zero(d);
  const FitResult fit_g = fit_pmle(model, stat, g2_flat, Vector::Zero(d));
  RandomSource chain_a = rs.substream(2);
  const PosteriorSample post_g = draw_posterior(c, model, stat, fit_g, &block_a, chain_a);
  const Matrix q = upper_factor(fit_g.precision);
  const double r0 = select_r0(static_cast<double>(d), 2.0 * std::log(n), 1.0);

  // Identical priors.
  {
    RandomSource chain_b = rs.substream(3);
    const PosteriorSample post_b = draw_posterior(c, model, stat, fit_g, &block_b, chain_b);
    const PriorComparison pc =
        prior_comparison(fit_g, fit_g, post_g, post_b, q, r0, 0.0, n, c.grid_points);
    sink.check_le(n, "flat|flat", "distance_identical", pc.distance, pc.halfwidth, pc.halfwidth);
    sink.check_le(n, "flat|flat", "variance_term_identical", std::abs(pc.variance_term), 0.0);
    sink.check_le(n, "flat|flat", "bias_term_identical", pc.bias_term, 0.0);
  }

  // G^2 = 0 against G1^2 = w1 I over a sweep of w1.
  std::vector<double> distances;
  for (double w1 : {1.0, 0.1 * n, n, 10.0 * n}) {
    const Vector g2 = Vector::Constant(d, w1);
    const FitResult fit_g1 = fit_pmle(model, stat, g2, Vector::Zero(d));
    RandomSource chain_b = rs.substream(10 + static_cast<std::uint64_t>(distances.size()));
    const PosteriorSample post_g1 = draw_posterior(c, model, stat, fit_g1, &block_b, chain_b);
    const PriorComparison pc =
        prior_comparison(fit_g, fit_g1, post_g, post_g1, q, r0, 0.0, n, c.grid_points);
    const std::string pd = "flat|ridge(w=" + fmt(w1) + ")";
    // Under Q = sqrt(n) I the compared laws are N(sqrt(n)(mu_G - mu_G1), I) and
    // N(0, n / (n + w1) I).
    const double shift_sq = n * (fit_g.theta - fit_g1.theta).squaredNorm();
    const double exact = exact_prior_distance(d, shift_sq, 1.0, n / (n + w1));
    sink.add(std::nullopt, n, pd, "distance", pc.distance, pc.halfwidth);
    sink.add(std::nullopt, n, pd, "distance_exact", exact, 0.0, pc.distance,
             std::abs(pc.distance - exact) <= pc.halfwidth + 0.01);
    sink.add(std::nullopt, n, pd, "variance_term", pc.variance_term);
    sink.add(std::nullopt, n, pd, "bias_term", pc.bias_term);
    sink.add(std::nullopt, n, pd, "delta3", pc.delta3);
    sink.add(std::nullopt, n, pd, "inverse_n", pc.inverse_n);
    distances.push_back(pc.distance);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < distances.size(); ++i) monotone = monotone && distances[i] >= distances[i - 1];
  sink.add(std::nullopt, n, "flat|ridge", "distance_monotone", monotone ? 1.0 : 0.0, 0.0, 1.0,
           monotone);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<const ReportRow*> ExperimentResult::hard_checks() const {
  std::vector<const ReportRow*> out;
  for (const auto& r : rows) {
    if (r.hard_check()) out.push_back(&r);
  }
  return out;
}

std::vector<const ReportRow*> ExperimentResult::failed_checks() const {
  std::vector<const ReportRow*> out;
  for (const auto* r : hard_checks()) {
    if (!*r->pass) out.push_back(r);
  }
  return out;
}

const ReportRow* ExperimentResult::find(const std::string& metric, double n) const {
  for (const auto& r : rows) {
    if (!r.replication && r.metric == metric && (n < 0.0 || r.n == n)) return &r;
  }
  return nullptr;
}

unsigned resolve_jobs(unsigned configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("BVM_LAB_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ConfigInvalid(std::string("BVM_LAB_JOBS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(Index count, unsigned jobs, const std::function<void(Index)>& task) {
  if (count <= 0) return;
  const auto workers = static_cast<Index>(std::max(1u, jobs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<Index> next{0};
  auto work = [&] {
    for (Index i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1 || count == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (Index w = 0; w < std::min(workers, count); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  ExperimentResult result;
  result.experiment = config.experiment;
  RowSink sink{config.experiment, {}};
  const std::string& name = config.experiment;
  if (name == "validate-bounds") {
    run_validate_bounds(config, result, sink);
  } else if (name == "surrogate") {
    run_surrogate(config, result, sink);
  } else if (name == "expansion-rates") {
    run_expansion_rates(config, result, sink);
  } else if (name == "bvm-rates") {
    run_bvm_rates(config, result, sink);
  } else if (name == "coverage") {
    run_coverage(config, result, sink);
  } else if (name == "contraction") {
    run_contraction(config, result, sink);
  } else if (name == "effdim") {
    run_effdim(config, result, sink);
  } else if (name == "prior-compare") {
    run_prior_compare(config, result, sink);
  }
  result.rows.insert(result.rows.end(), sink.rows.begin(), sink.rows.end());
  return result;
}

RunOutcome run(const ExperimentConfig& config) {
  RunOutcome out;
  out.result = run_experiment(config);
  const auto& res = out.result;
  std::filesystem::create_directories(config.out);

  const auto csv = config.out / (config.experiment + ".csv");
  write_report(res.rows, csv);
  out.files.push_back(csv);
  if (!res.bounds.empty()) {
    const auto table = config.out / (config.experiment + "-tail.csv");
    write_bounds(res.bounds, table);
    out.files.push_back(table);
  }

  nlohmann::ordered_json manifest;
  manifest["experiment"] = config.experiment;
  manifest["version"] = kVersion;
  manifest["created"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
  manifest["config"] = echo(config);
  auto& seeds = manifest["replications"] = nlohmann::ordered_json::array();
  for (const auto& s : res.seeds) {
    seeds.push_back({{"replication", s.replication},
                     {"n", s.n},
                     {"seed", s.seed},
                     {"stream", s.stream},
                     {"substream", s.substream}});
  }
  auto& checks = manifest["checks"] = nlohmann::ordered_json::array();
  for (const auto* r : res.hard_checks()) {
    checks.push_back({{"metric", r->metric},
                      {"n", r->n},
                      {"value", r->value},
                      {"bound", r->bound ? nlohmann::ordered_json(*r->bound) : nlohmann::ordered_json()},
                      {"pass", *r->pass}});
  }
  std::vector<std::string> files;
  for (const auto& f : out.files) files.push_back(f.filename().string());
  manifest["files"] = files;
  manifest["passed"] = res.passed();
  const auto mpath = config.out / "manifest.json";
  std::ofstream(mpath, std::ios::binary) << manifest.dump(2) << '\n';
  out.files.push_back(mpath);
  out.exit_code = res.passed() ? 0 : 1;
  return out;
}

}  // namespace bvmlab
