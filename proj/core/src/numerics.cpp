#include "bvmlab/numerics.hpp"

#include "bvmlab/errors.hpp"

#include <cmath>
#include <string>

namespace bvmlab {

bool is_symmetric(const Matrix& m, double relative_tolerance) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= relative_tolerance * scale;
}

void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

SpdFactor::SpdFactor(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
  if (m.size() == 0) {
    lower_ = Matrix(0, 0);
    return;
  }
  if (!m.allFinite()) throw NotPositiveDefinite("non-finite entries");
  if (!is_symmetric(m)) throw NotSymmetric("asymmetry exceeds 1e-12 relative");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("non-positive pivot");
  lower_ = llt.matrixL();
  if (!(lower_.diagonal().array() > 0.0).all()) {
    throw NotPositiveDefinite("non-positive pivot");
  }
}

Vector SpdFactor::solve(const Vector& b) const {
  require_same_dim(b.size(), dim(), "solve");
  Vector y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdFactor::solve(const Matrix& b) const {
  require_same_dim(b.rows(), dim(), "solve");
  Matrix y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Vector SpdFactor::whiten(const Vector& x) const {
  require_same_dim(x.size(), dim(), "whiten");
  return lower_.triangularView<Eigen::Lower>().solve(x);
}

Vector SpdFactor::apply_transpose(const Vector& x) const {
  require_same_dim(x.size(), dim(), "apply_transpose");
  return lower_.transpose().triangularView<Eigen::Upper>() * x;
}

Vector SpdFactor::inverse_transpose(const Vector& g) const {
  require_same_dim(g.size(), dim(), "inverse_transpose");
  return lower_.transpose().triangularView<Eigen::Upper>().solve(g);
}

Matrix SpdFactor::inverse_transpose(const Matrix& g) const {
  require_same_dim(g.rows(), dim(), "inverse_transpose");
  return lower_.transpose().triangularView<Eigen::Upper>().solve(g);
}

Matrix SpdFactor::inverse() const {
  Matrix inv = solve(Matrix::Identity(dim(), dim()).eval());
  return 0.5 * (inv + inv.transpose());
}

double SpdFactor::log_det() const {
  return 2.0 * lower_.diagonal().array().log().sum();
}

SpdFactor spd_factor(const Matrix& m) { return SpdFactor(m); }

double trace_solve(const Matrix& a, const Matrix& b) {
  if (b.rows() != b.cols()) throw DimensionMismatch("trace_solve: B not square");
  require_same_dim(a.rows(), b.rows(), "trace_solve");
  const SpdFactor f(a);
  return f.solve(b).trace();
}

Vector sorted_spectrum(const Matrix& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw DimensionMismatch("spectrum: not square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  Vector ev = es.eigenvalues();
  return ev.reverse();
}

double symmetric_norm(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  return sorted_spectrum(symmetric).cwiseAbs().maxCoeff();
}

Matrix symmetric_sqrt(const Matrix& psd) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(psd);
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Vector relative_spectrum(const Matrix& a, const SpdFactor& m) {
  require_same_dim(a.rows(), m.dim(), "relative_spectrum");
  const auto l = m.lower().triangularView<Eigen::Lower>();
  Matrix x = l.solve(a);
  Matrix y = l.solve(x.transpose().eval());
  return sorted_spectrum(0.5 * (y + y.transpose()));
}

}  // namespace bvmlab
