#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace onebit {

// Derives an independent stream seed from a master seed and a stream index
// (splitmix64 finalizer). Used wherever trials, restarts, or grid cells need
// their own reproducible randomness: derived streams are stable no matter how
// many other streams run or in what order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Seeded random source. The generator is std::mt19937_64 (bit-exact across
// platforms by the standard); Gaussians come from the Marsaglia polar method
// on top of 53-bit uniforms, so a given seed reproduces the same stream on
// every build of this release.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via the polar method. Consumes a data-dependent number
  // of uniforms (rejection), which is fine: the stream is still a pure
  // function of the seed.
  double gaussian();

  Eigen::VectorXd gaussian_vector(Eigen::Index n);

  // Uniform draw from the Euclidean ball of the given radius:
  // Gaussian direction times radius * U^(1/k).
  Eigen::VectorXd uniform_ball(Eigen::Index k, double radius);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace onebit
