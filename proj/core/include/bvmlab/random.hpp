#pragma once

#include "bvmlab/numerics.hpp"

#include <array>
#include <cstdint>

namespace bvmlab {

// xoshiro256** seeded through SplitMix64 from (seed, stream). Normals use the
// Box-Muller transform and are generated in pairs; a given (seed, stream)
// always produces the same sequence.
class RandomSource {
 public:
  RandomSource(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent child source; distinct tags give distinct sequences.
  RandomSource substream(std::uint64_t tag) const;

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double rademacher();
  std::uint64_t poisson(double lambda);
  bool bernoulli(double p);

  Vector gaussian_vector(Index dim);
  void fill_normal(Eigen::Ref<Matrix> out);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

// dim independent standard normals from rs.
Vector gaussian_vector(RandomSource& rs, Index dim);

}  // namespace bvmlab
