#include "bvmlab/models.hpp"

#include "bvmlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bvmlab {

namespace {

constexpr Index kBatchChunk = 256;

Eigen::ArrayXd softplus(const Eigen::ArrayXd& v) {
  return v.max(0.0) + (-v.abs()).exp().log1p();
}

Eigen::ArrayXd logistic_sigmoid(const Eigen::ArrayXd& v) { return (1.0 + (-v).exp()).inverse(); }

Eigen::ArrayXd phi_array(GlmLink link, const Eigen::ArrayXd& v, int order) {
  if (link == GlmLink::poisson) return v.exp();
  if (order == 0) return softplus(v);
  const Eigen::ArrayXd s = logistic_sigmoid(v);
  const Eigen::ArrayXd s1 = s * (1.0 - s);
  switch (order) {
    case 1: return s;
    case 2: return s1;
    case 3: return s1 * (1.0 - 2.0 * s);
    case 4: return s1 * (1.0 - 6.0 * s1);
    default: throw std::invalid_argument("phi derivative order must be 0..4");
  }
}

void check_order(int order) {
  if (order < 1 || order > 4) throw std::invalid_argument("directional order must be 1..4");
}

}  // namespace

// ---------------------------------------------------------------------------

CosineBasis::CosineBasis(Index size) : size_(size) {
  if (size < 0) throw std::invalid_argument("basis size must be non-negative");
}

void CosineBasis::evaluate(double x, Eigen::Ref<Vector> out) const {
  require_same_dim(out.size(), size_, "CosineBasis::evaluate");
  if (size_ == 0) return;
  // Chebyshev recurrence for cos(j a).
  const double c = std::cos(std::numbers::pi * x);
  double prev = 1.0;
  double cur = c;
  for (Index j = 0; j < size_; ++j) {
    out[j] = std::numbers::sqrt2 * cur;
    const double next = 2.0 * c * cur - prev;
    prev = cur;
    cur = next;
  }
}

Vector CosineBasis::operator()(double x) const {
  Vector out(size_);
  evaluate(x, out);
  return out;
}

Matrix CosineBasis::design(const Vector& xs) const {
  Matrix out(xs.size(), size_);
  Vector row(size_);
  for (Index i = 0; i < xs.size(); ++i) {
    evaluate(xs[i], row);
    out.row(i) = row.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------

Vector Model::log_partition_batch(const Matrix& thetas) const {
  Vector out(thetas.cols());
  for (Index b = 0; b < thetas.cols(); ++b) out[b] = log_partition(thetas.col(b));
  return out;
}

double log_lik(const Model& model, const Vector& statistic, const Vector& theta) {
  require_same_dim(statistic.size(), theta.size(), "log_lik");
  return statistic.dot(theta) - model.log_partition(theta);
}

double log_lik(const Model& model, const Dataset& data, const Vector& theta) {
  return log_lik(model, model.statistic(data), theta);
}

Vector grad_log_lik(const Model& model, const Vector& statistic, const Vector& theta) {
  return statistic - model.log_partition_gradient(theta);
}

Vector leading(const Vector& v, Index dim) {
  Vector out = Vector::Zero(dim);
  const Index k = std::min(dim, v.size());
  out.head(k) = v.head(k);
  return out;
}

Vector sobolev_truth(Index p, double s_star, double radius2) {
  Vector theta(p);
  double norm = 0.0;
  for (Index j = 1; j <= p; ++j) {
    const double jd = static_cast<double>(j);
    theta[j - 1] = std::pow(jd, -(s_star + 0.5)) * ((j % 2 == 1) ? 1.0 : -1.0);
    norm += std::pow(jd, 2.0 * s_star) * theta[j - 1] * theta[j - 1];
  }
  if (p > 0) theta *= std::sqrt(radius2 / norm);
  return theta;
}

// ---------------------------------------------------------------------------

InverseCdfSampler::InverseCdfSampler(const Vector& theta) {
  const CosineBasis basis(theta.size());
  Vector psi(theta.size());
  Vector exponent(kGridIntervals + 1);
  for (Index k = 0; k <= kGridIntervals; ++k) {
    basis.evaluate(static_cast<double>(k) / kGridIntervals, psi);
    exponent[k] = psi.dot(theta);
  }
  const double shift = exponent.maxCoeff();
  if (!std::isfinite(shift)) throw NonFiniteIntegrand("density exponent is not finite");
  cumulative_.resize(kGridIntervals + 1);
  cumulative_[0] = 0.0;
  double left = std::exp(exponent[0] - shift);
  for (Index k = 1; k <= kGridIntervals; ++k) {
    const double right = std::exp(exponent[k] - shift);
    cumulative_[k] = cumulative_[k - 1] + 0.5 * (left + right);
    left = right;
  }
  cumulative_ /= cumulative_[kGridIntervals];
}

double InverseCdfSampler::quantile(double u) const {
  const double* begin = cumulative_.data();
  const double* end = begin + cumulative_.size();
  const double* it = std::upper_bound(begin, end, u);
  Index k = static_cast<Index>(it - begin) - 1;
  k = std::clamp<Index>(k, 0, kGridIntervals - 1);
  const double width = cumulative_[k + 1] - cumulative_[k];
  const double frac = width > 0.0 ? std::clamp((u - cumulative_[k]) / width, 0.0, 1.0) : 0.5;
  return (static_cast<double>(k) + frac) / kGridIntervals;
}

double InverseCdfSampler::draw(RandomSource& rs) const { return quantile(rs.uniform()); }

// ---------------------------------------------------------------------------

LogDensityModel::LogDensityModel(std::size_t n, Index dim, std::size_t quadrature_nodes)
    : n_(n), dim_(dim), quad_(quadrature_nodes) {
  if (dim < 1) throw std::invalid_argument("log-density model needs dim >= 1");
  basis_ = basis_at_nodes(dim);
}

Matrix LogDensityModel::basis_at_nodes(Index size) const {
  return CosineBasis(size).design(quad_.nodes());
}

Vector LogDensityModel::node_probabilities(const Matrix& basis, const Vector& theta,
                                           double* phi_out) const {
  require_same_dim(theta.size(), basis.cols(), "log-density parameter");
  const Vector e = basis * theta;
  const double mx = e.maxCoeff();
  if (!std::isfinite(mx)) throw NonFiniteIntegrand("exponent is not finite");
  Vector a = (e.array() - mx).exp() * quad_.weights().array();
  const double z = a.sum();
  if (!(z > 0.0) || !std::isfinite(z)) throw NonFiniteIntegrand("normalizer is not finite");
  if (phi_out != nullptr) *phi_out = mx + std::log(z);
  return a / z;
}

double LogDensityModel::phi(const Vector& theta) const {
  double value = 0.0;
  node_probabilities(basis_, theta, &value);
  return value;
}

PhiDerivatives LogDensityModel::phi_derivatives(const Vector& theta) const {
  PhiDerivatives out;
  const Vector p = node_probabilities(basis_, theta, &out.value);
  out.gradient = basis_.transpose() * p;
  const Matrix centered = basis_.rowwise() - out.gradient.transpose();
  out.hessian = centered.transpose() * p.asDiagonal() * centered;
  return out;
}

Eigen::Vector4d LogDensityModel::central_moments(const Vector& theta, const Vector& u) const {
  require_same_dim(u.size(), dim_, "direction");
  const Vector p = node_probabilities(basis_, theta, nullptr);
  const Eigen::ArrayXd x = (basis_ * u).array();
  const double mean = (p.array() * x).sum();
  const Eigen::ArrayXd c = x - mean;
  const Eigen::ArrayXd c2 = c.square();
  Eigen::Vector4d out;
  out[0] = (p.array() * c2).sum();
  out[1] = (p.array() * c2 * c.abs()).sum();
  out[2] = (p.array() * c2.square()).sum();
  out[3] = (p.array() * c2 * c).sum();
  return out;
}

double LogDensityModel::log_partition(const Vector& theta) const {
  return static_cast<double>(n_) * phi(theta);
}

Vector LogDensityModel::log_partition_gradient(const Vector& theta) const {
  const Vector p = node_probabilities(basis_, theta, nullptr);
  return static_cast<double>(n_) * (basis_.transpose() * p);
}

Matrix LogDensityModel::fisher(const Vector& theta) const {
  return static_cast<double>(n_) * phi_derivatives(theta).hessian;
}

Vector LogDensityModel::log_partition_batch(const Matrix& thetas) const {
  require_same_dim(thetas.rows(), dim_, "log-density parameter batch");
  Vector out(thetas.cols());
  const Eigen::ArrayXd w = quad_.weights().array();
  for (Index start = 0; start < thetas.cols(); start += kBatchChunk) {
    const Index count = std::min(kBatchChunk, thetas.cols() - start);
    const Matrix e = basis_ * thetas.middleCols(start, count);
    for (Index b = 0; b < count; ++b) {
      const double mx = e.col(b).maxCoeff();
      if (!std::isfinite(mx)) throw NonFiniteIntegrand("exponent is not finite");
      const double z = ((e.col(b).array() - mx).exp() * w).sum();
      out[start + b] = static_cast<double>(n_) * (mx + std::log(z));
    }
  }
  return out;
}

double LogDensityModel::log_partition_directional(const Vector& theta, const Vector& u,
                                                  int order) const {
  check_order(order);
  const double n = static_cast<double>(n_);
  if (order == 1) return log_partition_gradient(theta).dot(u);
  const Eigen::Vector4d m = central_moments(theta, u);
  switch (order) {
    case 2: return n * m[0];
    case 3: return n * m[3];
    default: return n * (m[2] - 3.0 * m[0] * m[0]);
  }
}

Vector LogDensityModel::statistic(const Dataset& data) const {
  if (data.observations.size() != n_) {
    throw DimensionMismatch("dataset has " + std::to_string(data.observations.size()) +
                            " observations, model expects " + std::to_string(n_));
  }
  const CosineBasis basis(dim_);
  Vector total = Vector::Zero(dim_);
  Vector psi(dim_);
  for (double x : data.observations) {
    basis.evaluate(x, psi);
    total += psi;
  }
  return total;
}

Vector LogDensityModel::expected_statistic(const Vector& truth) const {
  const Index size = std::max(truth.size(), dim_);
  const Matrix basis = size == dim_ ? basis_ : basis_at_nodes(size);
  const Vector p = node_probabilities(basis, leading(truth, size), nullptr);
  return static_cast<double>(n_) * (basis.leftCols(dim_).transpose() * p);
}

Matrix LogDensityModel::score_covariance(const Vector& truth) const {
  const Index size = std::max(truth.size(), dim_);
  const Matrix full = size == dim_ ? basis_ : basis_at_nodes(size);
  const Vector p = node_probabilities(full, leading(truth, size), nullptr);
  const Matrix basis = full.leftCols(dim_);
  const Vector mean = basis.transpose() * p;
  const Matrix centered = basis.rowwise() - mean.transpose();
  return static_cast<double>(n_) * (centered.transpose() * p.asDiagonal() * centered);
}

Dataset LogDensityModel::sample(const Vector& truth, RandomSource& rs) const {
  const InverseCdfSampler sampler(truth);
  Dataset data;
  data.model = ModelKind::log_density;
  data.n = n_;
  data.p = static_cast<std::size_t>(dim_);
  data.seed = rs.seed();
  data.observations.resize(n_);
  for (auto& x : data.observations) x = sampler.draw(rs);
  return data;
}

// ---------------------------------------------------------------------------

double glm_phi_derivs(GlmLink link, double v, int order) {
  if (order < 0 || order > 4) throw std::invalid_argument("phi derivative order must be 0..4");
  if (link == GlmLink::poisson) return std::exp(v);
  if (order == 0) {
    // log(1 + e^v) without overflow for large v.
    return v > 30.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  }
  const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  const double s1 = s * (1.0 - s);
  switch (order) {
    case 1: return s;
    case 2: return s1;
    case 3: return s1 * (1.0 - 2.0 * s);
    default: return s1 * (1.0 - 6.0 * s1);
  }
}

GlmModel::GlmModel(GlmLink link, std::size_t n, Index dim) : link_(link), n_(n), dim_(dim) {
  if (n == 0 || dim < 1) throw std::invalid_argument("GLM needs n >= 1 and dim >= 1");
  points_.resize(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    points_[static_cast<Index>(i)] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }
  design_ = CosineBasis(dim).design(points_);
}

ModelKind GlmModel::kind() const {
  return link_ == GlmLink::logistic ? ModelKind::logistic : ModelKind::poisson;
}

double GlmModel::log_partition(const Vector& theta) const {
  require_same_dim(theta.size(), dim_, "GLM parameter");
  return phi_array(link_, (design_ * theta).array(), 0).sum();
}

Vector GlmModel::log_partition_gradient(const Vector& theta) const {
  require_same_dim(theta.size(), dim_, "GLM parameter");
  const Vector d1 = phi_array(link_, (design_ * theta).array(), 1).matrix();
  return design_.transpose() * d1;
}

Matrix GlmModel::fisher(const Vector& theta) const {
  require_same_dim(theta.size(), dim_, "GLM parameter");
  const Vector d2 = phi_array(link_, (design_ * theta).array(), 2).matrix();
  return design_.transpose() * d2.asDiagonal() * design_;
}

Vector GlmModel::log_partition_batch(const Matrix& thetas) const {
  require_same_dim(thetas.rows(), dim_, "GLM parameter batch");
  Vector out(thetas.cols());
  for (Index start = 0; start < thetas.cols(); start += kBatchChunk) {
    const Index count = std::min(kBatchChunk, thetas.cols() - start);
    const Matrix v = design_ * thetas.middleCols(start, count);
    for (Index b = 0; b < count; ++b) {
      out[start + b] = phi_array(link_, v.col(b).array(), 0).sum();
    }
  }
  return out;
}

double GlmModel::log_partition_directional(const Vector& theta, const Vector& u,
                                           int order) const {
  check_order(order);
  require_same_dim(u.size(), dim_, "direction");
  const Eigen::ArrayXd d = phi_array(link_, (design_ * theta).array(), order);
  return (d * (design_ * u).array().pow(order)).sum();
}

Vector GlmModel::statistic(const Dataset& data) const {
  if (data.observations.size() != n_) {
    throw DimensionMismatch("dataset has " + std::to_string(data.observations.size()) +
                            " observations, model expects " + std::to_string(n_));
  }
  const Eigen::Map<const Vector> y(data.observations.data(), static_cast<Index>(n_));
  return design_.transpose() * y;
}

Vector GlmModel::truth_index(const Vector& truth) const {
  if (truth.size() <= dim_) return design_ * leading(truth, dim_);
  return CosineBasis(truth.size()).design(points_) * truth;
}

Vector GlmModel::expected_statistic(const Vector& truth) const {
  const Vector d1 = phi_array(link_, truth_index(truth).array(), 1).matrix();
  return design_.transpose() * d1;
}

Matrix GlmModel::score_covariance(const Vector& truth) const {
  const Vector d2 = phi_array(link_, truth_index(truth).array(), 2).matrix();
  return design_.transpose() * d2.asDiagonal() * design_;
}

Dataset GlmModel::sample(const Vector& truth, RandomSource& rs) const {
  const Vector v = truth_index(truth);
  Dataset data;
  data.model = kind();
  data.n = n_;
  data.p = static_cast<std::size_t>(dim_);
  data.seed = rs.seed();
  data.observations.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const double mean = glm_phi_derivs(link_, v[static_cast<Index>(i)], 1);
    data.observations[i] = link_ == GlmLink::logistic
                               ? (rs.bernoulli(mean) ? 1.0 : 0.0)
                               : static_cast<double>(rs.poisson(mean));
  }
  return data;
}

// ---------------------------------------------------------------------------

GaussianSurrogateModel::GaussianSurrogateModel(std::size_t n, Index dim) : n_(n), dim_(dim) {
  if (n == 0 || dim < 1) throw std::invalid_argument("surrogate needs n >= 1 and dim >= 1");
}

double GaussianSurrogateModel::log_partition(const Vector& theta) const {
  require_same_dim(theta.size(), dim_, "surrogate parameter");
  return 0.5 * static_cast<double>(n_) * theta.squaredNorm();
}

Vector GaussianSurrogateModel::log_partition_gradient(const Vector& theta) const {
  require_same_dim(theta.size(), dim_, "surrogate parameter");
  return static_cast<double>(n_) * theta;
}

Matrix GaussianSurrogateModel::fisher(const Vector&) const {
  return static_cast<double>(n_) * Matrix::Identity(dim_, dim_);
}

Vector GaussianSurrogateModel::log_partition_batch(const Matrix& thetas) const {
  require_same_dim(thetas.rows(), dim_, "surrogate parameter batch");
  return 0.5 * static_cast<double>(n_) * thetas.colwise().squaredNorm().transpose();
}

double GaussianSurrogateModel::log_partition_directional(const Vector& theta, const Vector& u,
                                                         int order) const {
  check_order(order);
  const double n = static_cast<double>(n_);
  if (order == 1) return n * theta.dot(u);
  if (order == 2) return n * u.squaredNorm();
  return 0.0;
}

Vector GaussianSurrogateModel::statistic(const Dataset& data) const {
  if (data.observations.size() != static_cast<std::size_t>(dim_)) {
    throw DimensionMismatch("surrogate dataset must hold dim entries of S");
  }
  return Eigen::Map<const Vector>(data.observations.data(), dim_);
}

Vector GaussianSurrogateModel::expected_statistic(const Vector& truth) const {
  return static_cast<double>(n_) * leading(truth, dim_);
}

Matrix GaussianSurrogateModel::score_covariance(const Vector&) const {
  return static_cast<double>(n_) * Matrix::Identity(dim_, dim_);
}

Dataset GaussianSurrogateModel::sample(const Vector& truth, RandomSource& rs) const {
  const Vector s = expected_statistic(truth) +
                   std::sqrt(static_cast<double>(n_)) * rs.gaussian_vector(dim_);
  Dataset data;
  data.model = ModelKind::gaussian_surrogate;
  data.n = n_;
  data.p = static_cast<std::size_t>(dim_);
  data.seed = rs.seed();
  data.observations.assign(s.data(), s.data() + s.size());
  return data;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Model> make_model(ModelKind kind, std::size_t n, Index dim,
                                  std::size_t quadrature_nodes) {
  switch (kind) {
    case ModelKind::log_density:
      return std::make_unique<LogDensityModel>(n, dim, quadrature_nodes);
    case ModelKind::logistic: return std::make_unique<GlmModel>(GlmLink::logistic, n, dim);
    case ModelKind::poisson: return std::make_unique<GlmModel>(GlmLink::poisson, n, dim);
    case ModelKind::gaussian_surrogate: return std::make_unique<GaussianSurrogateModel>(n, dim);
  }
  throw std::invalid_argument("unknown model kind");
}

// ---------------------------------------------------------------------------

namespace {

double psi_envelope(Index p) {
  // sup_x sum_j psi_j(x)^2 q_j^2 with q_j^{-2} = j log^2(j + 1), on a fine grid.
  const CosineBasis basis(p);
  Vector q2(p);
  for (Index j = 1; j <= p; ++j) {
    const double l = std::log(static_cast<double>(j) + 1.0);
    q2[j - 1] = 1.0 / (static_cast<double>(j) * l * l);
  }
  Vector psi(p);
  double best = 0.0;
  constexpr int kGrid = 2000;
  for (int k = 0; k <= kGrid; ++k) {
    basis.evaluate(static_cast<double>(k) / kGrid, psi);
    best = std::max(best, (psi.array().square() * q2.array()).sum());
  }
  return std::sqrt(best);
}

void flag(AuditReport& r, bool ok, const std::string& what) {
  if (!ok) {
    r.passed = false;
    r.violations.push_back(what);
  }
}

}  // namespace

AuditReport audit_conditions(const LogDensityModel& model, const std::vector<Vector>& theta_probes,
                             const std::vector<Vector>& u_probes,
                             const AuditThresholds& thresholds) {
  if (theta_probes.empty() || u_probes.empty()) {
    throw std::invalid_argument("audit_conditions needs non-empty probe sets");
  }
  AuditReport r;
  double curv_min = std::numeric_limits<double>::infinity();
  double curv_max = 0.0;
  double f_ratio = 0.0;
  for (const Vector& theta : theta_probes) {
    const Matrix h = model.phi_derivatives(theta).hessian;
    const Vector ev = sorted_spectrum(h);
    curv_max = std::max(curv_max, ev[0]);
    curv_min = std::min(curv_min, ev[ev.size() - 1]);
    for (const Vector& u : u_probes) {
      const Eigen::Vector4d m = model.central_moments(theta, u);
      if (m[0] <= 0.0) continue;
      f_ratio = std::max(f_ratio, std::pow(m[1], 2.0 / 3.0) / m[0]);
      f_ratio = std::max(f_ratio, std::sqrt(m[2]) / m[0]);
    }
  }
  r.c_phi1 = curv_min > 0.0 ? 1.0 / std::sqrt(curv_min) : std::numeric_limits<double>::infinity();
  r.c_phi2 = std::sqrt(curv_max);
  r.c_f = std::sqrt(f_ratio);
  r.c_psi = psi_envelope(model.dim());
  flag(r, r.c_phi1 <= thresholds.c_phi, "C_phi1 above threshold");
  flag(r, r.c_phi2 <= thresholds.c_phi, "C_phi2 above threshold");
  flag(r, r.c_f <= thresholds.c_f, "C_f above threshold");
  flag(r, r.c_psi <= thresholds.c_psi, "C_psi above threshold");
  return r;
}

AuditReport audit_conditions(const GlmModel& model, const Vector& truth,
                             const std::vector<Vector>& u_probes,
                             const AuditThresholds& thresholds) {
  if (u_probes.empty()) throw std::invalid_argument("audit_conditions needs directions");
  AuditReport r;
  const Vector v = model.truth_index(truth);
  const double base = glm_phi_derivs(model.link(), 0.0, 2);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double ratio = glm_phi_derivs(model.link(), v[i], 2) / base;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  // For GLMs c_phi1 / c_phi2 hold C_{1,phi} <= 1 <= C_{2,phi}.
  r.c_phi1 = lo;
  r.c_phi2 = hi;
  double f_ratio = 0.0;
  for (const Vector& u : u_probes) {
    const Eigen::ArrayXd a = (model.design() * u).array();
    const double m2 = a.square().mean();
    if (m2 <= 0.0) continue;
    f_ratio = std::max(f_ratio, std::sqrt(a.square().square().mean()) / m2);
  }
  r.c_f = std::sqrt(f_ratio);
  const Matrix f = model.score_covariance(truth);
  const Vector ev = sorted_spectrum(f);
  r.c_fisher_inv_sq = ev[ev.size() - 1] / static_cast<double>(model.sample_size());
  r.c_psi = std::numbers::sqrt2;
  flag(r, r.c_phi1 >= 1.0 / thresholds.c_phi, "C_1phi below threshold");
  flag(r, r.c_phi2 <= thresholds.c_phi, "C_2phi above threshold");
  flag(r, r.c_f <= thresholds.c_f, "C_f above threshold");
  flag(r, r.c_fisher_inv_sq >= 1.0 / (thresholds.c_fisher * thresholds.c_fisher),
       "C_F^{-2} below threshold");
  return r;
}

}  // namespace bvmlab
