#pragma once

#include "bvmlab/numerics.hpp"
#include "bvmlab/random.hpp"

#include <string>
#include <vector>

namespace bvmlab {

// Trace, squared Frobenius norm and operator norm of a PSD operator W.
struct TailSpec {
  double p = 0.0;   // tr W
  double v2 = 0.0;  // tr W^2
  double lambda = 0.0;  // ||W||

  static TailSpec from_spectrum(const Vector& eigenvalues);
  static TailSpec from_operator(const Matrix& w);
  static TailSpec identity(Index dim);
  TailSpec normalized() const;  // divided so that lambda = 1
};

// z(W, x) = sqrt(p + 2 v sqrt(x) + 2 lambda x).
double z_quantile(const TailSpec& ts, double x);
// sqrt(tr B) + sqrt(2 x ||B||).
double z_simplified(double tr_b, double norm_b, double x);

struct ExpTailSpec {
  TailSpec base;  // normalized to lambda = 1
  double g = 0.0;
  double x_c = 0.0;
  double mu_c = 0.0;
  double g_c = 0.0;
  double residual = 0.0;  // relative residual of the crossing equation at x_c
};

// mu(x) = (1 + v / (2 sqrt x))^{-1}.
double exp_tail_mu(const TailSpec& base, double x);

// Solves (g - sqrt(p mu(x))) / mu(x) = z(W, x) + 1 for x_c by bisection.
// The base is normalized internally. Throws NoCrossing if g_c < 1.
ExpTailSpec solve_exp_tail(const TailSpec& base, double g);

// z(W, x) for x <= x_c, g_c / mu_c + 2 (x - x_c) / g_c beyond.
double exp_tail_quantile(const ExpTailSpec& ets, double x);

enum class NoiseFamily { gaussian, rademacher };

struct TailCheck {
  double z = 0.0;
  double empirical = 0.0;
  double bound = 0.0;      // e^{-x}
  double tolerance = 0.0;  // bound + 3 sqrt(bound / n)
  bool passed = false;
};

// Fraction of draws with <W xi, xi> > z(W, x)^2 for each x, xi Gaussian or
// Rademacher; all x share the same draws.
std::vector<TailCheck> mc_tail_validate(const Matrix& w, const std::vector<double>& xs,
                                        std::size_t n_samples, RandomSource& rs,
                                        NoiseFamily family = NoiseFamily::gaussian);
TailCheck mc_tail_validate(const Matrix& w, double x, std::size_t n_samples, RandomSource& rs,
                           NoiseFamily family = NoiseFamily::gaussian);

struct ChiSquareCheck {
  double upper_square = 0.0;  // P(|g|^2 >= p + 2 sqrt(p x) + 2x)
  double upper_norm = 0.0;    // P(|g| >= sqrt p + sqrt(2x))
  double lower_square = 0.0;  // P(|g|^2 <= p - 2 sqrt(p x))
  double bound = 0.0;
  bool passed = false;
};

ChiSquareCheck chi_square_bounds_check(double p, double x);

// P(chi^2_p > t).
double chi_square_upper_tail(double p, double t);

}  // namespace bvmlab
