#include "bvmlab/quadrature.hpp"

#include "bvmlab/errors.hpp"

#include <cmath>
#include <numbers>

namespace bvmlab {

void gauss_legendre(std::size_t order, Vector& nodes, Vector& weights) {
  if (order == 0) throw std::invalid_argument("gauss_legendre: order 0");
  const auto n = static_cast<Index>(order);
  nodes.resize(n);
  weights.resize(n);
  if (n == 1) {
    nodes[0] = 0.0;
    weights[0] = 2.0;
    return;
  }
  for (Index i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (Index k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

UnitQuadrature::UnitQuadrature(std::size_t n_nodes) {
  if (n_nodes < kPanelOrder || n_nodes % kPanelOrder != 0) {
    throw std::invalid_argument("quadrature node count must be a positive multiple of 16");
  }
  Vector x;
  Vector w;
  gauss_legendre(kPanelOrder, x, w);
  const std::size_t panels = n_nodes / kPanelOrder;
  const double h = 1.0 / static_cast<double>(panels);
  nodes_.resize(static_cast<Index>(n_nodes));
  weights_.resize(static_cast<Index>(n_nodes));
  for (std::size_t p = 0; p < panels; ++p) {
    const double left = h * static_cast<double>(p);
    for (std::size_t k = 0; k < kPanelOrder; ++k) {
      const auto idx = static_cast<Index>(p * kPanelOrder + k);
      nodes_[idx] = left + 0.5 * h * (x[static_cast<Index>(k)] + 1.0);
      weights_[idx] = 0.5 * h * w[static_cast<Index>(k)];
    }
  }
}

double UnitQuadrature::integrate(const std::function<double(double)>& f) const {
  double total = 0.0;
  for (Index i = 0; i < nodes_.size(); ++i) {
    const double v = f(nodes_[i]);
    if (!std::isfinite(v)) throw NonFiniteIntegrand("at x = " + std::to_string(nodes_[i]));
    total += weights_[i] * v;
  }
  return total;
}

double integrate_unit_interval(const std::function<double(double)>& f, std::size_t n_nodes) {
  return UnitQuadrature(n_nodes).integrate(f);
}

}  // namespace bvmlab
