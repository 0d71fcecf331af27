#include "bvmlab/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bvmlab {

PriorSpec PriorSpec::truncation(Index m) {
  if (m < 1) throw std::invalid_argument("truncation level must be >= 1");
  PriorSpec p;
  p.kind = PriorKind::truncation;
  p.level = m;
  return p;
}

PriorSpec PriorSpec::smooth(double s, double w, Index cap) {
  if (!(s >= 0.0) || !(w >= 0.0)) throw std::invalid_argument("smooth prior needs s, w >= 0");
  PriorSpec p;
  p.kind = PriorKind::smooth;
  p.s = s;
  p.w = w;
  p.level = cap;
  return p;
}

Index PriorSpec::support_dim(Index p) const {
  if (kind == PriorKind::truncation) return std::min(level, p);
  return level > 0 ? std::min(level, p) : p;
}

Vector PriorSpec::precision_diagonal(Index p) const {
  const Index d = support_dim(p);
  Vector g2 = Vector::Zero(d);
  if (kind == PriorKind::smooth) {
    for (Index j = 1; j <= d; ++j) g2[j - 1] = w * std::pow(static_cast<double>(j), 2.0 * s);
  }
  return g2;
}

std::string PriorSpec::descriptor() const {
  std::ostringstream os;
  if (kind == PriorKind::truncation) {
    os << "truncation(m=" << level << ")";
  } else {
    os << "smooth(s=" << s << ";w=" << w;
    if (level > 0) os << ";cap=" << level;
    os << ")";
  }
  return os.str();
}

Matrix precision(const PriorSpec& prior, Index p) {
  return prior.precision_diagonal(p).asDiagonal();
}

Index truncation_level(double n) {
  if (!(n > 1.0)) throw std::invalid_argument("truncation_level needs n > 1");
  return std::max<Index>(1, static_cast<Index>(std::ceil(std::cbrt(n) / std::log(n))));
}

Tradeoff tradeoff_w(double n, double s) {
  if (!(n > 0.0) || !(s > 0.0)) throw std::invalid_argument("tradeoff_w needs n, s > 0");
  Tradeoff t;
  t.w = std::pow(n, 1.0 / (2.0 * s + 1.0));
  // Guard against n / w landing a hair above an exact power.
  const double m = std::pow(n / t.w, 1.0 / (2.0 * s));
  t.m = static_cast<Index>(std::ceil(m * (1.0 - 1e-12)));
  return t;
}

double effective_dimension(const Matrix& fisher, const Vector& g2, const Matrix& h2) {
  require_same_dim(fisher.rows(), g2.size(), "effective_dimension prior");
  require_same_dim(fisher.rows(), h2.rows(), "effective_dimension H^2");
  Matrix dg2 = fisher;
  dg2.diagonal() += g2;
  return trace_solve(dg2, h2);
}

SandwichReport dimension_sandwich_check(const Matrix& fisher, const PriorSpec& prior,
                                        const Matrix& h2, double n) {
  const Index d = fisher.rows();
  const Vector g2 = prior.precision_diagonal(d);
  require_same_dim(g2.size(), d, "sandwich: prior support must match F");
  SandwichReport r;
  r.p_g = effective_dimension(fisher, g2, h2);
  const Vector ev = sorted_spectrum(fisher);
  r.c1f = ev[d - 1] / n;
  r.c2f = ev[0] / n;
  const bool flat = (g2.array() == 0.0).all();
  if (prior.kind == PriorKind::truncation || flat) {
    r.j = d;
    const double gm2 = g2[d - 1];
    r.lower = r.c1f * n / (r.c2f * n + gm2) * static_cast<double>(d);
    r.upper = static_cast<double>(d);
  } else {
    Index j = 1;
    for (Index k = 1; k <= d; ++k) {
      if (g2[k - 1] <= n) j = k;
    }
    r.j = j;
    // Tail-sum ratio over the finite support.
    double c2g = 0.0;
    double tail = 0.0;
    for (Index k = d; k >= 1; --k) {
      tail += 1.0 / g2[k - 1];
      c2g = std::max(c2g, tail / (static_cast<double>(k) / g2[k - 1]));
    }
    r.c2g = c2g;
    const double gj2 = g2[j - 1];
    const double jd = static_cast<double>(j);
    r.lower = jd * r.c1f * n / (r.c1f * n + gj2);
    r.upper = jd * (1.0 + r.c2f * c2g * n / gj2);
  }
  r.passed = r.lower <= r.p_g * (1.0 + 1e-12) && r.p_g <= r.upper * (1.0 + 1e-12);
  return r;
}

}  // namespace bvmlab
