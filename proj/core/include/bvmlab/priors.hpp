#pragma once

#include "bvmlab/numerics.hpp"

#include <string>

namespace bvmlab {

enum class PriorKind { truncation, smooth };

// Diagonal Gaussian prior N(0, G^{-2}) on the first support_dim coefficients,
// with coefficients beyond the support excluded (infinite precision).
//   truncation(m): zero penalty on j <= m.
//   smooth(s, w, cap): g_j^2 = w j^{2s} on j <= cap (cap = 0 means no cap).
struct PriorSpec {
  PriorKind kind = PriorKind::truncation;
  Index level = 0;
  double s = 0.0;
  double w = 0.0;

  static PriorSpec truncation(Index m);
  static PriorSpec smooth(double s, double w, Index cap = 0);

  Index support_dim(Index p) const;
  // g_j^2 for j = 1..support_dim(p).
  Vector precision_diagonal(Index p) const;
  std::string descriptor() const;
};

Matrix precision(const PriorSpec& prior, Index p);

// m* = ceil(n^{1/3} / log n).
Index truncation_level(double n);

struct Tradeoff {
  double w = 0.0;
  Index m = 0;
};
// w = n^{1/(2s+1)}, m = ceil((n / w)^{1/(2s)}).
Tradeoff tradeoff_w(double n, double s);

// tr{H^2 (F + G^2)^{-1}} with G^2 given by its diagonal.
double effective_dimension(const Matrix& fisher, const Vector& g2, const Matrix& h2);

struct SandwichReport {
  double p_g = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  Index j = 0;       // m for truncation, J = max{j : g_j^2 <= n} for smooth priors
  double c1f = 0.0;  // lambda_min(F) / n
  double c2f = 0.0;  // lambda_max(F) / n
  double c2g = 0.0;  // sup_J sum_{j>=J} g_j^{-2} / (J g_J^{-2})
  bool passed = false;
};

// Truncation priors: C1 n / (C2 n + g_m^2) m <= p_G <= m.
// Smooth priors: J C1 n / (C1 n + g_J^2) <= p_G <= J (1 + C2 C2g n g_J^{-2}).
SandwichReport dimension_sandwich_check(const Matrix& fisher, const PriorSpec& prior,
                                        const Matrix& h2, double n);

}  // namespace bvmlab
