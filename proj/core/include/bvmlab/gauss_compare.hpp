#pragma once

#include "bvmlab/numerics.hpp"
#include "bvmlab/random.hpp"

#include <optional>

namespace bvmlab {

// xi ~ N(0, sigma_xi), eta ~ N(0, sigma_eta); compares |xi - a| with |eta|.
struct GaussComparisonCase {
  Matrix sigma_xi;
  Matrix sigma_eta;
  Vector shift;
};

struct ComparisonBound {
  double value = 0.0;
  std::optional<double> frobenius;  // present when 3 ||S||^2 <= ||S||_Fr^2 for both
  double a1_xi = 0.0, a2_xi = 0.0, a1_eta = 0.0, a2_eta = 0.0;
  double spectral_gap = 0.0;  // l1 distance of the sorted spectra
};

// (1/sqrt(A1x A2x) + 1/sqrt(A1e A2e)) (|l_xi - l_eta|_1 + |a|^2), with
// A_k^2 = sum_{j >= k} l_j^2 over spectra sorted non-increasing.
// Throws DegenerateSpectrum when some A_2 vanishes.
ComparisonBound comparison_bound(const GaussComparisonCase& c);

// Empirical sup_r |P(|xi - a| <= r) - P(|eta| <= r)| on 512 radii spanning
// both samples. Common random numbers are used when the covariances commute.
double mc_norm_kolmogorov(const GaussComparisonCase& c, std::size_t n_samples, RandomSource& rs);

}  // namespace bvmlab
