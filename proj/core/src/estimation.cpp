#include "bvmlab/estimation.hpp"

#include "bvmlab/errors.hpp"
#include "bvmlab/tail_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bvmlab {

double penalized_log_lik(const Model& model, const Vector& statistic, const Vector& g2,
                         const Vector& theta) {
  require_same_dim(g2.size(), theta.size(), "prior support");
  return log_lik(model, statistic, theta) - 0.5 * (g2.array() * theta.array().square()).sum();
}

namespace {

double safe_objective(const Model& model, const Vector& stat, const Vector& g2,
                      const Vector& theta) {
  try {
    const double v = penalized_log_lik(model, stat, g2, theta);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  } catch (const NonFiniteIntegrand&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

FitResult fit_pmle(const Model& model, const Vector& statistic, const Vector& g2,
                   const Vector& theta_init, const SolverOptions& options) {
  const Index d = model.dim();
  require_same_dim(statistic.size(), d, "statistic");
  require_same_dim(g2.size(), d, "prior support");
  require_same_dim(theta_init.size(), d, "initial point");

  FitResult fit;
  fit.g2 = g2;
  fit.theta = theta_init;
  double value = penalized_log_lik(model, statistic, g2, fit.theta);
  for (int it = 0;; ++it) {
    const Vector grad =
        statistic - model.log_partition_gradient(fit.theta) - g2.cwiseProduct(fit.theta);
    Matrix precision = model.fisher(fit.theta);
    precision.diagonal() += g2;
    const SpdFactor factor(precision);
    const Vector step = factor.solve(grad);
    const double slope = grad.dot(step);
    fit.decrement = std::sqrt(std::max(slope, 0.0));
    if (fit.decrement <= options.tolerance) {
      fit.precision = std::move(precision);
      fit.objective = value;
      fit.iterations = it;
      return fit;
    }
    if (it >= options.max_iterations) {
      throw NotConverged("Newton decrement " + format_double(fit.decrement) + " after " +
                         std::to_string(it) + " iterations");
    }
    // L_G is a difference of terms much larger than itself; its rounding level
    // scales with their magnitudes.
    const double magnitude = std::abs(statistic.dot(fit.theta)) +
                             std::abs(model.log_partition(fit.theta)) +
                             0.5 * (g2.array() * fit.theta.array().square()).sum();
    const double rounding =
        64.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(value), magnitude});
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= options.max_backtracks; ++bt) {
      const Vector candidate = fit.theta + alpha * step;
      const double cand_value = safe_objective(model, statistic, g2, candidate);
      const bool armijo = cand_value >= value + options.armijo * alpha * slope;
      // Near the optimum the predicted gain falls below the rounding level of L_G.
      const bool terminal = alpha == 1.0 && slope < 1e-6 && cand_value >= value - rounding;
      if (armijo || terminal) {
        if (cand_value < value) fit.monotone = fit.monotone && cand_value >= value - rounding;
        fit.theta = candidate;
        value = cand_value;
        accepted = true;
        break;
      }
      alpha *= 0.5;
      ++fit.backtracks;
    }
    if (!accepted) throw NotConverged("line search failed to increase L_G");
  }
}

FitResult fit_pmle(const Model& model, const Dataset& data, const PriorSpec& prior,
                   const SolverOptions& options) {
  const Vector g2 = prior.precision_diagonal(model.dim());
  require_same_dim(g2.size(), model.dim(), "prior support must equal model dim");
  return fit_pmle(model, model.statistic(data), g2, Vector::Zero(model.dim()), options);
}

TruthContext fit_target(const Model& model, const Vector& g2, const Vector& truth,
                        const TargetOptions& options) {
  const Index d = model.dim();
  TruthContext ctx;
  ctx.truth = truth;
  ctx.g2 = g2;
  ctx.expected_statistic = model.expected_statistic(truth);
  const Vector zero = Vector::Zero(d);
  const FitResult target = fit_pmle(model, ctx.expected_statistic, g2, zero, options.solver);
  ctx.target = target.theta;
  ctx.precision = target.precision;
  if ((g2.array() == 0.0).all()) {
    ctx.parametric = ctx.target;
  } else {
    ctx.parametric =
        fit_pmle(model, ctx.expected_statistic, Vector::Zero(d), zero, options.solver).theta;
  }
  ctx.v2 = model.score_covariance(truth);
  if (options.nu0_sq < 1.0) throw std::invalid_argument("nu0^2 must be >= 1");
  ctx.h2 = options.nu0_sq * ctx.v2;
  ctx.x = options.x >= 0.0 ? options.x : std::log(static_cast<double>(model.sample_size()));
  const Vector spectrum = relative_spectrum(ctx.h2, SpdFactor(ctx.precision));
  ctx.tr_b = spectrum.sum();
  ctx.norm_b = spectrum[0];
  ctx.r_g = 2.0 * z_simplified(ctx.tr_b, ctx.norm_b, ctx.x);
  return ctx;
}

Vector score(const TruthContext& truth, const Vector& statistic) {
  require_same_dim(statistic.size(), truth.expected_statistic.size(), "score");
  return statistic - truth.expected_statistic;
}

double fisher_expansion_residual(const FitResult& fit, const TruthContext& truth,
                                 const Vector& score) {
  const SpdFactor dg(truth.precision);
  return (dg.apply_transpose(fit.theta - truth.target) - dg.whiten(score)).norm();
}

double operator_gap(const Matrix& fitted_precision, const Matrix& target_precision) {
  const Vector ev = relative_spectrum(fitted_precision - target_precision,
                                      SpdFactor(target_precision));
  return ev.cwiseAbs().maxCoeff();
}

WilksResiduals wilks_residual(const Model& model, const Vector& statistic,
                              const FitResult& fit, const TruthContext& truth,
                              const Vector& score) {
  const SpdFactor dg(truth.precision);
  const double excess = penalized_log_lik(model, statistic, truth.g2, fit.theta) -
                        penalized_log_lik(model, statistic, truth.g2, truth.target);
  WilksResiduals r;
  r.wilks = std::abs(excess - 0.5 * dg.whiten(score).squaredNorm());
  r.variant = std::abs(excess - 0.5 * dg.apply_transpose(fit.theta - truth.target).squaredNorm());
  r.operator_gap = operator_gap(fit.precision, truth.precision);
  return r;
}

BiasTerms bias_terms(const TruthContext& truth, const Matrix& q, double tau3) {
  const SpdFactor dg(truth.precision);
  const Vector& theta = truth.parametric;
  const Vector g2theta = truth.g2.cwiseProduct(theta);
  BiasTerms b;
  b.shrinkage = (q * dg.solve(g2theta)).norm();
  b.bias = (q * (truth.target - theta)).norm();
  b.defect = (dg.apply_transpose(theta - truth.target) - dg.whiten(g2theta)).norm();
  b.r_b = std::sqrt(2.0 * (truth.g2.array() * theta.array().square()).sum());
  const Matrix qdq = q * dg.solve(Matrix(q.transpose()));
  b.bound = 2.0 * std::sqrt(symmetric_norm(0.5 * (qdq + qdq.transpose())) *
                            std::pow(b.r_b, 3) * tau3);
  return b;
}

double delta_k(const Model& model, const Vector& theta, const Vector& u, int k) {
  double factorial = 1.0;
  for (int i = 2; i <= k; ++i) factorial *= i;
  return -model.log_partition_directional(theta, u, k) / factorial;
}

TauEstimate tau_k(const Model& model, const std::vector<Vector>& probes, const Matrix& h2,
                  double r, int k, int n_directions, RandomSource& rs) {
  if (n_directions < 64) throw std::invalid_argument("tau_k needs at least 64 directions");
  if (!(r > 0.0)) throw std::invalid_argument("tau_k needs r > 0");
  const SpdFactor h(h2);
  std::vector<Vector> dirs;
  dirs.reserve(static_cast<std::size_t>(n_directions));
  for (int i = 0; i < n_directions; ++i) {
    const Vector xi = rs.gaussian_vector(h.dim());
    dirs.push_back(h.inverse_transpose(Vector(r * xi / xi.norm())));
  }
  TauEstimate tau;
  const double rk = std::pow(r, k);
  for (const Vector& theta : probes) {
    for (const Vector& u : dirs) {
      tau.value = std::max(tau.value, std::abs(delta_k(model, theta, u, k)) / rk);
    }
  }
  return tau;
}

std::vector<Vector> tau_probes(const TruthContext& truth, const Vector& fitted, int extra,
                               RandomSource& rs) {
  std::vector<Vector> probes{truth.target, fitted};
  const SpdFactor dg(truth.precision);
  const Index d = dg.dim();
  for (int i = 0; i < extra; ++i) {
    Vector xi = rs.gaussian_vector(d);
    const double radius = 0.5 * truth.r_g * std::pow(rs.uniform(), 1.0 / static_cast<double>(d));
    xi *= radius / xi.norm();
    probes.push_back(truth.target + dg.inverse_transpose(xi));
  }
  return probes;
}

ConcentrationReport concentration_radius(const TruthContext& truth, double x, double tau3) {
  const Vector spectrum = relative_spectrum(truth.h2, SpdFactor(truth.precision));
  ConcentrationReport c;
  c.r_g = 2.0 * z_simplified(spectrum.sum(), spectrum[0], x);
  c.z = z_quantile(TailSpec::from_spectrum(spectrum), x);
  c.rho = 3.0 * c.r_g * tau3;
  c.conditions_hold = c.rho <= 0.5 && (1.0 - c.rho) * c.r_g >= c.z;
  return c;
}

double diamond(double r0, double tau3, double tau4) {
  if (r0 < 0.0 || tau3 < 0.0 || tau4 < 0.0) throw std::invalid_argument("diamond inputs");
  return 4.0 * std::pow(r0, 6) * tau3 * tau3 + 4.0 * std::pow(r0, 4) * tau4;
}

RemainderBudget remainder_budget(double r0, double tau3, double tau4) {
  RemainderBudget b;
  b.tau3 = tau3;
  b.tau4 = tau4;
  b.r0 = r0;
  b.diamond = diamond(r0, tau3, tau4);
  b.c0 = 1.0 - 3.0 * r0 * tau3;
  b.gate = b.diamond <= 0.5 && b.c0 >= 0.5;
  return b;
}

double select_r0(double p_hat, double x, double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("select_r0 needs C0 > 0");
  return (2.0 * std::sqrt(p_hat + 1.0) + std::sqrt(x)) / c0;
}

RemainderBudget select_r0_consistent(double p_hat, double x, double tau3, double tau4) {
  const double k = 2.0 * std::sqrt(p_hat + 1.0) + std::sqrt(x);
  // r0 (1 - 3 r0 tau3) = k
  double r0 = 2.0 * k;
  if (tau3 == 0.0) {
    r0 = k;
  } else {
    const double disc = 1.0 - 12.0 * tau3 * k;
    if (disc >= 0.0) r0 = 2.0 * k / (1.0 + std::sqrt(disc));
  }
  return remainder_budget(r0, tau3, tau4);
}

namespace {

std::string join(const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::string join(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    if (i > 0) out += ';';
    out += join(Vector(m.row(i).transpose()));
  }
  return out;
}

}  // namespace

std::string to_record(const FitResult& fit) {
  std::ostringstream os;
  os << "theta=" << join(fit.theta) << '\n'
     << "precision=" << join(fit.precision) << '\n'
     << "g2=" << join(fit.g2) << '\n'
     << "decrement=" << format_double(fit.decrement) << '\n'
     << "objective=" << format_double(fit.objective) << '\n'
     << "iterations=" << fit.iterations << '\n'
     << "backtracks=" << fit.backtracks << '\n'
     << "monotone=" << (fit.monotone ? 1 : 0) << '\n';
  return os.str();
}

std::string to_record(const TruthContext& t) {
  std::ostringstream os;
  os << "truth=" << join(t.truth) << '\n'
     << "parametric=" << join(t.parametric) << '\n'
     << "target=" << join(t.target) << '\n'
     << "g2=" << join(t.g2) << '\n'
     << "expected_statistic=" << join(t.expected_statistic) << '\n'
     << "precision=" << join(t.precision) << '\n'
     << "v2=" << join(t.v2) << '\n'
     << "h2=" << join(t.h2) << '\n'
     << "x=" << format_double(t.x) << '\n'
     << "r_g=" << format_double(t.r_g) << '\n'
     << "tr_b=" << format_double(t.tr_b) << '\n'
     << "norm_b=" << format_double(t.norm_b) << '\n';
  return os.str();
}

}  // namespace bvmlab
