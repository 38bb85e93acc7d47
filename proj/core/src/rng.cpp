#include "onebit/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace onebit {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 step with the golden-ratio increment scaled by the stream
  // index; distinct (master, stream) pairs land in well-separated states.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Eigen::VectorXd Rng::gaussian_vector(Eigen::Index n) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = gaussian();
  return out;
}

Eigen::VectorXd Rng::uniform_ball(Eigen::Index k, double radius) {
  if (k < 1) throw std::invalid_argument("uniform_ball: dimension must be >= 1");
  if (radius <= 0.0) throw std::invalid_argument("uniform_ball: radius must be positive");
  Eigen::VectorXd dir = gaussian_vector(k);
  double norm = dir.norm();
  while (norm == 0.0) {  // astronomically unlikely, but keep the draw well defined
    dir = gaussian_vector(k);
    norm = dir.norm();
  }
  const double scale = radius * std::pow(uniform(), 1.0 / static_cast<double>(k));
  return dir * (scale / norm);
}

}  // namespace onebit
