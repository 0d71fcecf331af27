#include "bvmlab/tail_bounds.hpp"

#include "bvmlab/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <limits>

namespace bvmlab {

TailSpec TailSpec::from_spectrum(const Vector& eigenvalues) {
  TailSpec ts;
  ts.p = eigenvalues.sum();
  ts.v2 = eigenvalues.squaredNorm();
  ts.lambda = eigenvalues.size() > 0 ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  return ts;
}

TailSpec TailSpec::from_operator(const Matrix& w) { return from_spectrum(sorted_spectrum(w)); }

TailSpec TailSpec::identity(Index dim) {
  const double d = static_cast<double>(dim);
  return TailSpec{d, d, 1.0};
}

TailSpec TailSpec::normalized() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("TailSpec with zero norm");
  return TailSpec{p / lambda, v2 / (lambda * lambda), 1.0};
}

double z_quantile(const TailSpec& ts, double x) {
  if (x < 0.0) throw std::invalid_argument("z_quantile needs x >= 0");
  return std::sqrt(ts.p + 2.0 * std::sqrt(ts.v2 * x) + 2.0 * ts.lambda * x);
}

double z_simplified(double tr_b, double norm_b, double x) {
  return std::sqrt(tr_b) + std::sqrt(2.0 * x * norm_b);
}

double exp_tail_mu(const TailSpec& base, double x) {
  return 1.0 / (1.0 + std::sqrt(base.v2) / (2.0 * std::sqrt(x)));
}

namespace {

// Positive below the crossing, negative above it.
double crossing_gap(const TailSpec& base, double g, double x, double* scale) {
  const double mu = exp_tail_mu(base, x);
  const double lhs = (g - std::sqrt(base.p * mu)) / mu;
  const double rhs = z_quantile(base, x) + 1.0;
  if (scale != nullptr) *scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return lhs - rhs;
}

}  // namespace

ExpTailSpec solve_exp_tail(const TailSpec& base_in, double g) {
  ExpTailSpec ets;
  ets.base = base_in.normalized();
  ets.g = g;
  const TailSpec& b = ets.base;
  double lo = 1e-8;
  double hi = 1e8;
  if (crossing_gap(b, g, lo, nullptr) <= 0.0) {
    throw NoCrossing("crossing equation has no root above 1e-8");
  }
  // The crossing grows like g^2 / 2; extend the bracket for very large g.
  while (crossing_gap(b, g, hi, nullptr) > 0.0) {
    hi *= 16.0;
    if (!std::isfinite(hi) || hi > 1e300) throw NoCrossing("no sign change in bracket");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (crossing_gap(b, g, mid, nullptr) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double s_lo = 1.0;
  double s_hi = 1.0;
  const double r_lo = std::abs(crossing_gap(b, g, lo, &s_lo)) / s_lo;
  const double r_hi = std::abs(crossing_gap(b, g, hi, &s_hi)) / s_hi;
  ets.x_c = r_lo <= r_hi ? lo : hi;
  ets.residual = std::min(r_lo, r_hi);
  ets.mu_c = exp_tail_mu(b, ets.x_c);
  ets.g_c = g - std::sqrt(b.p * ets.mu_c);
  if (ets.g_c < 1.0) throw NoCrossing("g_c = " + std::to_string(ets.g_c) + " < 1");
  return ets;
}

double exp_tail_quantile(const ExpTailSpec& ets, double x) {
  if (x <= ets.x_c) return z_quantile(ets.base, x);
  return ets.g_c / ets.mu_c + 2.0 * (x - ets.x_c) / ets.g_c;
}

std::vector<TailCheck> mc_tail_validate(const Matrix& w, const std::vector<double>& xs,
                                        std::size_t n_samples, RandomSource& rs,
                                        NoiseFamily family) {
  if (w.rows() != w.cols()) throw DimensionMismatch("W must be square");
  const Index dim = w.rows();
  const TailSpec ts = TailSpec::from_operator(w);
  std::vector<TailCheck> out(xs.size());
  std::vector<double> thresholds(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    out[k].z = z_quantile(ts, xs[k]);
    thresholds[k] = out[k].z * out[k].z;
  }
  std::vector<std::size_t> exceed(xs.size(), 0);
  const bool diagonal = w.isDiagonal(0.0);
  const Vector diag = w.diagonal();
  Vector xi(dim);
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (Index j = 0; j < dim; ++j) {
      xi[j] = family == NoiseFamily::gaussian ? rs.normal() : rs.rademacher();
    }
    const double q = diagonal ? (diag.array() * xi.array().square()).sum() : xi.dot(w * xi);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (q > thresholds[k]) ++exceed[k];
    }
  }
  const double n = static_cast<double>(n_samples);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    out[k].empirical = static_cast<double>(exceed[k]) / n;
    out[k].bound = std::exp(-xs[k]);
    out[k].tolerance = out[k].bound + 3.0 * std::sqrt(out[k].bound / n);
    out[k].passed = out[k].empirical <= out[k].tolerance;
  }
  return out;
}

TailCheck mc_tail_validate(const Matrix& w, double x, std::size_t n_samples, RandomSource& rs,
                           NoiseFamily family) {
  return mc_tail_validate(w, std::vector<double>{x}, n_samples, rs, family).front();
}

double chi_square_upper_tail(double p, double t) {
  if (t <= 0.0) return 1.0;
  const boost::math::chi_squared_distribution<double> chi(p);
  return boost::math::cdf(boost::math::complement(chi, t));
}

ChiSquareCheck chi_square_bounds_check(double p, double x) {
  if (!(p >= 1.0) || !(x >= 0.0)) throw std::invalid_argument("chi_square_bounds_check");
  ChiSquareCheck c;
  c.bound = std::exp(-x);
  c.upper_square = chi_square_upper_tail(p, p + 2.0 * std::sqrt(p * x) + 2.0 * x);
  const double r = std::sqrt(p) + std::sqrt(2.0 * x);
  c.upper_norm = chi_square_upper_tail(p, r * r);
  const double lower = p - 2.0 * std::sqrt(p * x);
  if (lower <= 0.0) {
    c.lower_square = 0.0;
  } else {
    const boost::math::chi_squared_distribution<double> chi(p);
    c.lower_square = boost::math::cdf(chi, lower);
  }
  c.passed = c.upper_square <= c.bound && c.upper_norm <= c.bound && c.lower_square <= c.bound;
  return c;
}

}  // namespace bvmlab
