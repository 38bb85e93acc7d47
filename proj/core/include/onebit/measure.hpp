#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

namespace onebit {

// Dense sensing matrix with i.i.d. standard Gaussian entries plus the seed
// that produced it. Entries are generated row by row, so (rows, cols, seed)
// reproduces the matrix bit for bit within a release. Hand-built matrices
// (tests, text fixtures) use the same wrapper with whatever seed tag the
// caller supplies.
class MeasurementEnsemble {
 public:
  MeasurementEnsemble(Eigen::MatrixXd entries, std::uint64_t seed)
      : entries_(std::move(entries)), seed_(seed) {}

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  std::uint64_t seed() const { return seed_; }

 private:
  Eigen::MatrixXd entries_;
  std::uint64_t seed_;
};

// One-bit measurement vector: every entry is exactly -1 or +1.
class SignPattern {
 public:
  SignPattern() = default;
  explicit SignPattern(std::vector<std::int8_t> bits);

  // Componentwise sign with sign(0) := +1.
  static SignPattern of_signs(const Eigen::VectorXd& v);

  Eigen::Index size() const { return static_cast<Eigen::Index>(bits_.size()); }
  int operator[](Eigen::Index i) const { return bits_[static_cast<std::size_t>(i)]; }
  const std::vector<std::int8_t>& bits() const { return bits_; }

  Eigen::VectorXd to_vector() const;
  SignPattern negated() const;

  friend bool operator==(const SignPattern&, const SignPattern&) = default;

 private:
  std::vector<std::int8_t> bits_;
};

// Measurement corruption description. `gaussian` adds N(0, sigma^2) noise to
// A*x before quantization; `sign_flip` flips each quantized bit independently
// with probability flip_prob. The seed makes the corruption reproducible.
struct NoiseSpec {
  enum class Kind { none, gaussian, sign_flip };

  Kind kind = Kind::none;
  double sigma = 0.0;
  double flip_prob = 0.0;
  std::uint64_t seed = 0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double sigma, std::uint64_t seed);
  static NoiseSpec sign_flip(double flip_prob, std::uint64_t seed);
};

// i.i.d. N(0,1) matrix, deterministic in (m, n, seed).
MeasurementEnsemble gaussian_matrix(Eigen::Index m, Eigen::Index n, std::uint64_t seed);

// b = sign(A x) with sign(0) := +1.
SignPattern sign_measure(const MeasurementEnsemble& A, const Eigen::VectorXd& x);

// Corrupted one-bit measurement per the noise spec.
SignPattern noisy_sign_measure(const MeasurementEnsemble& A, const Eigen::VectorXd& x,
                               const NoiseSpec& noise);

// Fraction of positions where the two patterns disagree, in [0, 1].
double hamming_dist(const SignPattern& b1, const SignPattern& b2);

// Normalized angle between unit vectors: arccos(<x,s>)/pi, in [0, 1].
// Inputs must be unit norm to within 1e-9. Computed from the chord as
// (2/pi)*asin(|x-s|/2), which is the same angle but stays exact in floating
// point near identical or antipodal pairs (the dot-product form rounds to
// +-1 and loses the angle entirely there).
double geodesic_dist(const Eigen::VectorXd& x, const Eigen::VectorXd& s);

// Binary matrix file: 8-byte magic "OBMTRX01", then rows/cols/seed as
// little-endian uint64, then rows*cols IEEE-754 binary64 entries row-major.
void save_matrix(const MeasurementEnsemble& A, const std::filesystem::path& path);
MeasurementEnsemble load_matrix(const std::filesystem::path& path);

// Text twin for fixtures: first line "rows cols seed", then one row per line.
void save_matrix_text(const MeasurementEnsemble& A, const std::filesystem::path& path);
MeasurementEnsemble load_matrix_text(const std::filesystem::path& path);

}  // namespace onebit
