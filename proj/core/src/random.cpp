#include "bvmlab/random.hpp"

#include "bvmlab/errors.hpp"

#include <cmath>
#include <numbers>

namespace bvmlab {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

double log_factorial(double k) { return std::lgamma(k + 1.0); }

// Hormann's PTRS transformed rejection, valid for lambda >= 10.
std::uint64_t poisson_ptrs(RandomSource& rs, double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rs.uniform() - 0.5;
    const double v = rs.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - log_factorial(k)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  std::uint64_t s = stream;
  const std::uint64_t stream_key = splitmix64(s);
  std::uint64_t mix = seed ^ rotl(stream_key, 17) ^ 0x6a09e667f3bcc909ULL;
  for (auto& word : state_) word = splitmix64(mix);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

RandomSource RandomSource::substream(std::uint64_t tag) const {
  std::uint64_t s = stream_ ^ rotl(tag + 0x3c6ef372fe94f82bULL, 29);
  return RandomSource(seed_, splitmix64(s));
}

std::uint64_t RandomSource::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RandomSource::uniform() {
  // 53 random bits, shifted by half an ulp so 0 is excluded.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomSource::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double RandomSource::rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

bool RandomSource::bernoulli(double p) { return uniform() < p; }

std::uint64_t RandomSource::poisson(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("poisson: invalid rate");
  }
  if (lambda == 0.0) return 0;
  if (lambda >= 30.0) return poisson_ptrs(*this, lambda);
  // Sequential inversion.
  double p = std::exp(-lambda);
  double cdf = p;
  const double u = uniform();
  std::uint64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
    if (p <= 0.0 && cdf < u) break;
  }
  return k;
}

Vector RandomSource::gaussian_vector(Index dim) {
  Vector out(dim);
  for (Index i = 0; i < dim; ++i) out[i] = normal();
  return out;
}

void RandomSource::fill_normal(Eigen::Ref<Matrix> out) {
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = normal();
  }
}

Vector gaussian_vector(RandomSource& rs, Index dim) { return rs.gaussian_vector(dim); }

}  // namespace bvmlab
