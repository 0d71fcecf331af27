#include "bvmlab/gauss_compare.hpp"

#include "bvmlab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bvmlab {

namespace {

void tail_norms(const Vector& sorted, double& a1, double& a2) {
  const double total = sorted.squaredNorm();
  a1 = std::sqrt(total);
  a2 = sorted.size() > 1 ? std::sqrt(std::max(total - sorted[0] * sorted[0], 0.0)) : 0.0;
}

Vector sorted_psd_spectrum(const Matrix& s) { return sorted_spectrum(s).cwiseMax(0.0); }

// Samples |L g - a| with L L^T = sigma.
Vector sample_norms(const Matrix& factor, const Vector& shift, std::size_t n, RandomSource& rs) {
  Vector out(static_cast<Index>(n));
  const Index d = factor.rows();
  Vector g(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) g[j] = rs.normal();
    out[static_cast<Index>(i)] = (factor * g - shift).norm();
  }
  return out;
}

Matrix psd_root(const Matrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

ComparisonBound comparison_bound(const GaussComparisonCase& c) {
  require_same_dim(c.sigma_xi.rows(), c.sigma_eta.rows(), "comparison covariances");
  require_same_dim(c.shift.size(), c.sigma_xi.rows(), "comparison shift");
  const Vector lx = sorted_psd_spectrum(c.sigma_xi);
  const Vector le = sorted_psd_spectrum(c.sigma_eta);
  ComparisonBound b;
  tail_norms(lx, b.a1_xi, b.a2_xi);
  tail_norms(le, b.a1_eta, b.a2_eta);
  b.spectral_gap = (lx - le).lpNorm<1>();
  const double scale = std::max({lx.maxCoeff(), le.maxCoeff(), 1e-300});
  if (b.spectral_gap <= 1e-12 * scale) b.spectral_gap = 0.0;
  const double excess = b.spectral_gap + c.shift.squaredNorm();
  if (excess == 0.0) {
    b.value = 0.0;
    b.frobenius = 0.0;
    return b;
  }
  if (b.a2_xi == 0.0 || b.a2_eta == 0.0) {
    throw DegenerateSpectrum("second tail norm vanishes");
  }
  b.value = (1.0 / std::sqrt(b.a1_xi * b.a2_xi) + 1.0 / std::sqrt(b.a1_eta * b.a2_eta)) * excess;
  const bool spread_xi = 3.0 * lx[0] * lx[0] <= b.a1_xi * b.a1_xi;
  const bool spread_eta = 3.0 * le[0] * le[0] <= b.a1_eta * b.a1_eta;
  if (spread_xi && spread_eta) b.frobenius = (1.0 / b.a1_xi + 1.0 / b.a1_eta) * excess;
  return b;
}

double mc_norm_kolmogorov(const GaussComparisonCase& c, std::size_t n_samples, RandomSource& rs) {
  require_same_dim(c.sigma_xi.rows(), c.sigma_eta.rows(), "comparison covariances");
  const bool commute =
      (c.sigma_xi * c.sigma_eta - c.sigma_eta * c.sigma_xi).cwiseAbs().maxCoeff() <=
      1e-12 * std::max(1.0, c.sigma_xi.cwiseAbs().maxCoeff() * c.sigma_eta.cwiseAbs().maxCoeff());
  Vector nx;
  Vector ne;
  if (commute) {
    // Shared eigenbasis: both samples are driven by the same normals.
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.sigma_xi);
    const Matrix& u = es.eigenvectors();
    const Vector sx = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Vector se = (u.transpose() * c.sigma_eta * u).diagonal().cwiseMax(0.0).cwiseSqrt();
    const Vector shift = u.transpose() * c.shift;
    nx.resize(static_cast<Index>(n_samples));
    ne.resize(static_cast<Index>(n_samples));
    Vector g(sx.size());
    for (std::size_t i = 0; i < n_samples; ++i) {
      for (Index j = 0; j < g.size(); ++j) g[j] = rs.normal();
      nx[static_cast<Index>(i)] = (sx.cwiseProduct(g) - shift).norm();
      ne[static_cast<Index>(i)] = se.cwiseProduct(g).norm();
    }
  } else {
    nx = sample_norms(psd_root(c.sigma_xi), c.shift, n_samples, rs);
    ne = sample_norms(psd_root(c.sigma_eta), Vector::Zero(c.shift.size()), n_samples, rs);
  }
  std::sort(nx.data(), nx.data() + nx.size());
  std::sort(ne.data(), ne.data() + ne.size());
  const double lo = std::min(nx[0], ne[0]);
  const double hi = std::max(nx[nx.size() - 1], ne[ne.size() - 1]);
  constexpr int kGrid = 512;
  const double n = static_cast<double>(n_samples);
  double best = 0.0;
  for (int k = 0; k < kGrid; ++k) {
    const double r = lo + (hi - lo) * static_cast<double>(k) / (kGrid - 1);
    const double fx =
        static_cast<double>(std::upper_bound(nx.data(), nx.data() + nx.size(), r) - nx.data()) / n;
    const double fe =
        static_cast<double>(std::upper_bound(ne.data(), ne.data() + ne.size(), r) - ne.data()) / n;
    best = std::max(best, std::abs(fx - fe));
  }
  return best;
}

}  // namespace bvmlab
