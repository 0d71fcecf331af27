#pragma once

#include "bvmlab/numerics.hpp"

#include <cstddef>
#include <functional>

namespace bvmlab {

inline constexpr std::size_t kDefaultQuadratureNodes = 2048;
inline constexpr std::size_t kPanelOrder = 16;

// Composite Gauss-Legendre rule on [0, 1]: n_nodes / 16 equal panels, each
// with a 16-point rule.
class UnitQuadrature {
 public:
  explicit UnitQuadrature(std::size_t n_nodes = kDefaultQuadratureNodes);

  std::size_t size() const { return static_cast<std::size_t>(nodes_.size()); }
  const Vector& nodes() const { return nodes_; }
  const Vector& weights() const { return weights_; }

  double integrate(const std::function<double(double)>& f) const;

 private:
  Vector nodes_;
  Vector weights_;
};

// Gauss-Legendre nodes and weights of the given order on [-1, 1].
void gauss_legendre(std::size_t order, Vector& nodes, Vector& weights);

// Throws NonFiniteIntegrand if f returns a non-finite value.
double integrate_unit_interval(const std::function<double(double)>& f,
                               std::size_t n_nodes = kDefaultQuadratureNodes);

}  // namespace bvmlab
