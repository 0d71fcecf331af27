#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace bvmlab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Lower Cholesky factor L of a symmetric positive definite M = L L^T.
class SpdFactor {
 public:
  explicit SpdFactor(const Matrix& m);

  Index dim() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  // L^{-1} x
  Vector whiten(const Vector& x) const;
  // L^T x, so that |L^T x|^2 = x^T M x
  Vector apply_transpose(const Vector& x) const;
  // L^{-T} g; maps N(0, I) to N(0, M^{-1})
  Vector inverse_transpose(const Vector& g) const;
  Matrix inverse_transpose(const Matrix& g) const;
  Matrix inverse() const;
  double log_det() const;

 private:
  Matrix lower_;
};

// Throws NotPositiveDefinite on a non-positive pivot, NotSymmetric if M is
// asymmetric beyond 1e-12 relative, DimensionMismatch if M is not square.
SpdFactor spd_factor(const Matrix& m);

// tr(A^{-1} B) for SPD A.
double trace_solve(const Matrix& a, const Matrix& b);

// Eigenvalues of a symmetric matrix in non-increasing order.
Vector sorted_spectrum(const Matrix& symmetric);

// max |eigenvalue| of a symmetric matrix.
double symmetric_norm(const Matrix& symmetric);

// Symmetric square root of a symmetric PSD matrix.
Matrix symmetric_sqrt(const Matrix& psd);

// Spectrum of L^{-1} A L^{-T} where M = L L^T, i.e. of M^{-1/2} A M^{-1/2}.
Vector relative_spectrum(const Matrix& a, const SpdFactor& m);

bool is_symmetric(const Matrix& m, double relative_tolerance = 1e-12);

void require_same_dim(Index a, Index b, const char* what);

}  // namespace bvmlab
