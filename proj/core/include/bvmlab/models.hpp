#pragma once

#include "bvmlab/dataset.hpp"
#include "bvmlab/numerics.hpp"
#include "bvmlab/quadrature.hpp"
#include "bvmlab/random.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace bvmlab {

// psi_j(x) = sqrt(2) cos(pi j x), j = 1..size, on [0, 1].
class CosineBasis {
 public:
  explicit CosineBasis(Index size);

  Index size() const { return size_; }
  void evaluate(double x, Eigen::Ref<Vector> out) const;
  Vector operator()(double x) const;
  // Row i holds Psi(xs[i]).
  Matrix design(const Vector& xs) const;

 private:
  Index size_;
};

// Models whose log-likelihood has the form L(theta) = <T, theta> - A(theta),
// with the data entering only through the statistic T. The stochastic part
// zeta(theta) = <T - E T, theta> is then linear in theta.
class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  // Number of basis coefficients the model is fitted on.
  virtual Index dim() const = 0;
  virtual std::size_t sample_size() const = 0;

  virtual double log_partition(const Vector& theta) const = 0;
  virtual Vector log_partition_gradient(const Vector& theta) const = 0;
  // F(theta) = Hessian of A.
  virtual Matrix fisher(const Vector& theta) const = 0;
  // A evaluated at every column of thetas.
  virtual Vector log_partition_batch(const Matrix& thetas) const;
  // d^k/dt^k A(theta + t u) at t = 0, for k = 1..4.
  virtual double log_partition_directional(const Vector& theta, const Vector& u,
                                           int order) const = 0;

  virtual Vector statistic(const Dataset& data) const = 0;
  // E T and Var T under the truth; the truth may carry more coefficients than dim().
  virtual Vector expected_statistic(const Vector& truth) const = 0;
  virtual Matrix score_covariance(const Vector& truth) const = 0;
  virtual Dataset sample(const Vector& truth, RandomSource& rs) const = 0;

  std::string_view name() const { return model_name(kind()); }
};

double log_lik(const Model& model, const Vector& statistic, const Vector& theta);
double log_lik(const Model& model, const Dataset& data, const Vector& theta);
Vector grad_log_lik(const Model& model, const Vector& statistic, const Vector& theta);

struct PhiDerivatives {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

// Inverse-CDF sampler for the density exp(<Psi(x), theta> - phi(theta)) on
// [0, 1], built from a 65536-interval cumulative trapezoid grid with linear
// interpolation.
class InverseCdfSampler {
 public:
  static constexpr Index kGridIntervals = 65536;

  explicit InverseCdfSampler(const Vector& theta);
  double draw(RandomSource& rs) const;
  double quantile(double u) const;

 private:
  Vector cumulative_;
};

class LogDensityModel final : public Model {
 public:
  LogDensityModel(std::size_t n, Index dim,
                  std::size_t quadrature_nodes = kDefaultQuadratureNodes);

  ModelKind kind() const override { return ModelKind::log_density; }
  Index dim() const override { return dim_; }
  std::size_t sample_size() const override { return n_; }

  double phi(const Vector& theta) const;
  PhiDerivatives phi_derivatives(const Vector& theta) const;
  // Central moments E|<Psi - E Psi, u>|^k for k = 2, 3, 4 (index 0..2),
  // and the signed third central moment at index 3.
  Eigen::Vector4d central_moments(const Vector& theta, const Vector& u) const;

  double log_partition(const Vector& theta) const override;
  Vector log_partition_gradient(const Vector& theta) const override;
  Matrix fisher(const Vector& theta) const override;
  Vector log_partition_batch(const Matrix& thetas) const override;
  double log_partition_directional(const Vector& theta, const Vector& u,
                                   int order) const override;

  Vector statistic(const Dataset& data) const override;
  Vector expected_statistic(const Vector& truth) const override;
  Matrix score_covariance(const Vector& truth) const override;
  Dataset sample(const Vector& truth, RandomSource& rs) const override;

  const UnitQuadrature& quadrature() const { return quad_; }

 private:
  // Normalized node probabilities w_k exp(<Psi(x_k), theta> - phi).
  Vector node_probabilities(const Matrix& basis, const Vector& theta, double* phi_out) const;
  Matrix basis_at_nodes(Index size) const;

  std::size_t n_;
  Index dim_;
  UnitQuadrature quad_;
  Matrix basis_;  // nodes x dim
};

enum class GlmLink { logistic, poisson };

// k-th derivative of the cumulant phi for k = 0..4.
double glm_phi_derivs(GlmLink link, double v, int order);

// Generalized linear model Y_i ~ P_{<Psi_i, theta>} on the fixed design
// X_i = (i - 1/2) / n.
class GlmModel final : public Model {
 public:
  GlmModel(GlmLink link, std::size_t n, Index dim);

  ModelKind kind() const override;
  Index dim() const override { return dim_; }
  std::size_t sample_size() const override { return n_; }
  GlmLink link() const { return link_; }
  const Matrix& design() const { return design_; }
  const Vector& design_points() const { return points_; }

  double log_partition(const Vector& theta) const override;
  Vector log_partition_gradient(const Vector& theta) const override;
  Matrix fisher(const Vector& theta) const override;
  Vector log_partition_batch(const Matrix& thetas) const override;
  double log_partition_directional(const Vector& theta, const Vector& u,
                                   int order) const override;

  Vector statistic(const Dataset& data) const override;
  Vector expected_statistic(const Vector& truth) const override;
  Matrix score_covariance(const Vector& truth) const override;
  Dataset sample(const Vector& truth, RandomSource& rs) const override;

  // <Psi_i, truth> with the truth's full basis length.
  Vector truth_index(const Vector& truth) const;

 private:
  GlmLink link_;
  std::size_t n_;
  Index dim_;
  Vector points_;
  Matrix design_;  // n x dim
};

// Gaussian sequence model L(theta) = <S, theta> - n |theta|^2 / 2 with
// S ~ N(n theta*, n I). The observation stored in a dataset is S itself.
class GaussianSurrogateModel final : public Model {
 public:
  GaussianSurrogateModel(std::size_t n, Index dim);

  ModelKind kind() const override { return ModelKind::gaussian_surrogate; }
  Index dim() const override { return dim_; }
  std::size_t sample_size() const override { return n_; }

  double log_partition(const Vector& theta) const override;
  Vector log_partition_gradient(const Vector& theta) const override;
  Matrix fisher(const Vector& theta) const override;
  Vector log_partition_batch(const Matrix& thetas) const override;
  double log_partition_directional(const Vector& theta, const Vector& u,
                                   int order) const override;

  Vector statistic(const Dataset& data) const override;
  Vector expected_statistic(const Vector& truth) const override;
  Matrix score_covariance(const Vector& truth) const override;
  Dataset sample(const Vector& truth, RandomSource& rs) const override;

 private:
  std::size_t n_;
  Index dim_;
};

std::unique_ptr<Model> make_model(ModelKind kind, std::size_t n, Index dim,
                                  std::size_t quadrature_nodes = kDefaultQuadratureNodes);

// theta*_j = A j^{-(s+1/2)} (-1)^{j+1}, A chosen so sum j^{2s} theta_j^2 = radius2.
Vector sobolev_truth(Index p, double s_star, double radius2 = 0.9);

// First dim coefficients of v, zero padded when v is shorter.
Vector leading(const Vector& v, Index dim);

struct AuditThresholds {
  double c_phi = 10.0;
  double c_f = 10.0;
  double c_fisher = 10.0;
  double c_psi = 10.0;
};

struct AuditReport {
  double c_phi1 = 0.0;  // C_{phi,1} from the smallest curvature ratio
  double c_phi2 = 0.0;  // C_{phi,2} from the largest curvature ratio
  double c_f = 0.0;
  double c_fisher_inv_sq = 0.0;  // C_F^{-2}
  double c_psi = 0.0;            // sup_x sum_j psi_j(x)^2 q_j^2
  bool passed = true;
  std::vector<std::string> violations;
};

AuditReport audit_conditions(const LogDensityModel& model, const std::vector<Vector>& theta_probes,
                             const std::vector<Vector>& u_probes,
                             const AuditThresholds& thresholds = {});
AuditReport audit_conditions(const GlmModel& model, const Vector& truth,
                             const std::vector<Vector>& u_probes,
                             const AuditThresholds& thresholds = {});

}  // namespace bvmlab
