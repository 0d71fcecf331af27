#pragma once

#include "bvmlab/models.hpp"
#include "bvmlab/numerics.hpp"
#include "bvmlab/priors.hpp"
#include "bvmlab/random.hpp"

#include <string>
#include <vector>

namespace bvmlab {

struct SolverOptions {
  double tolerance = 1e-9;
  int max_iterations = 100;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct FitResult {
  Vector theta;
  Matrix precision;  // F(theta) + G^2 at the solution
  Vector g2;
  double decrement = 0.0;  // |D^{-1} grad L_G| at the solution
  double objective = 0.0;
  int iterations = 0;
  int backtracks = 0;
  bool monotone = true;
};

// L_G(theta) = <T, theta> - A(theta) - |G theta|^2 / 2, G^2 = diag(g2).
double penalized_log_lik(const Model& model, const Vector& statistic, const Vector& g2,
                         const Vector& theta);

// Damped Newton ascent from theta_init with halving backtracking.
FitResult fit_pmle(const Model& model, const Vector& statistic, const Vector& g2,
                   const Vector& theta_init, const SolverOptions& options = {});
FitResult fit_pmle(const Model& model, const Dataset& data, const PriorSpec& prior,
                   const SolverOptions& options = {});

struct TargetOptions {
  double nu0_sq = 1.0;  // H^2 = nu0^2 V^2
  double x = -1.0;      // deviation level for r_G; negative means log n
  SolverOptions solver;
};

struct TruthContext {
  Vector truth;           // ambient truth, possibly longer than the support
  Vector parametric;      // argmax of E L over the support (no penalty)
  Vector target;          // theta*_G
  Vector g2;
  Vector expected_statistic;
  Matrix precision;       // D_G^2 = F(theta*_G) + G^2
  Matrix v2;
  Matrix h2;
  double x = 0.0;
  double r_g = 0.0;
  double tr_b = 0.0;      // tr(H D_G^{-2} H)
  double norm_b = 0.0;    // ||H D_G^{-2} H||
};

TruthContext fit_target(const Model& model, const Vector& g2, const Vector& truth,
                        const TargetOptions& options = {});

// grad zeta = T - E T.
Vector score(const TruthContext& truth, const Vector& statistic);

// |D_G (theta~ - theta*_G) - D_G^{-1} grad zeta|
double fisher_expansion_residual(const FitResult& fit, const TruthContext& truth,
                                 const Vector& score);

struct WilksResiduals {
  double wilks = 0.0;    // |L_G(theta~) - L_G(theta*_G) - |D_G^{-1} grad zeta|^2 / 2|
  double variant = 0.0;  // same with |D_G (theta~ - theta*_G)|^2 / 2
  double operator_gap = 0.0;  // ||D_G^{-1} (D~^2 - D_G^2) D_G^{-1}||
};

WilksResiduals wilks_residual(const Model& model, const Vector& statistic,
                              const FitResult& fit, const TruthContext& truth,
                              const Vector& score);

double operator_gap(const Matrix& fitted_precision, const Matrix& target_precision);

struct BiasTerms {
  double shrinkage = 0.0;  // |Q D_G^{-2} G^2 theta*|
  double bias = 0.0;       // |Q (theta*_G - theta*)|
  double defect = 0.0;     // |D_G (theta* - theta*_G) - D_G^{-1} G^2 theta*|
  double r_b = 0.0;        // sqrt(2) |G theta*|
  double bound = 0.0;      // 2 sqrt(||Q D_G^{-2} Q^T|| r_b^3 tau3)
};

// theta* here is the parametric truth on the support.
BiasTerms bias_terms(const TruthContext& truth, const Matrix& q, double tau3);

// (1/k!) d^k/dt^k E L(theta + t u) at t = 0; the linear part of E L only
// contributes for k = 1.
double delta_k(const Model& model, const Vector& theta, const Vector& u, int k);

struct TauEstimate {
  double value = 0.0;
  bool surrogate = true;  // sampled lower bound of the supremum
};

// max over probes and n_directions random u on {|H u| = r} of r^{-k} |delta_k|.
TauEstimate tau_k(const Model& model, const std::vector<Vector>& probes, const Matrix& h2,
                  double r, int k, int n_directions, RandomSource& rs);

// {theta*_G, theta~_G} plus `extra` points theta*_G + D_G^{-1} xi, |xi| <= r_G / 2.
std::vector<Vector> tau_probes(const TruthContext& truth, const Vector& fitted, int extra,
                               RandomSource& rs);

struct ConcentrationReport {
  double r_g = 0.0;
  double z = 0.0;  // z(B_G, x)
  double rho = 0.0;
  bool conditions_hold = false;  // 3 r_G tau3 <= 1/2 and (1 - rho) r_G >= z
};

ConcentrationReport concentration_radius(const TruthContext& truth, double x, double tau3);

struct RemainderBudget {
  double tau3 = 0.0;
  double tau4 = 0.0;
  double r0 = 0.0;
  double diamond = 0.0;
  double c0 = 1.0;
  bool surrogate = true;
  bool gate = false;  // diamond <= 1/2 and C0 >= 1/2
};

// 4 r0^6 tau3^2 + 4 r0^4 tau4.
double diamond(double r0, double tau3, double tau4);
RemainderBudget remainder_budget(double r0, double tau3, double tau4);

// (2 sqrt(p + 1) + sqrt(x)) / c0.
double select_r0(double p_hat, double x, double c0);
// Same with c0 = 1 - 3 r0 tau3 solved jointly; returns the smaller root,
// or the c0 = 1/2 value when no root exists (gate then fails).
RemainderBudget select_r0_consistent(double p_hat, double x, double tau3, double tau4);

std::string to_record(const FitResult& fit);
std::string to_record(const TruthContext& truth);

}  // namespace bvmlab
