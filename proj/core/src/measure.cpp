#include "onebit/measure.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "onebit/rng.hpp"

namespace onebit {

namespace {

constexpr char kMatrixMagic[8] = {'O', 'B', 'M', 'T', 'R', 'X', '0', '1'};
constexpr double kUnitNormTol = 1e-9;

int sign_of(double t) { return t >= 0.0 ? 1 : -1; }

void check_signal(const MeasurementEnsemble& A, const Eigen::VectorXd& x) {
  if (x.size() != A.cols()) {
    throw std::invalid_argument("sign_measure: signal length " + std::to_string(x.size()) +
                                " does not match matrix columns " + std::to_string(A.cols()));
  }
}

double parse_double(const std::string& token) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error("matrix text: bad numeric token '" + token + "'");
  }
  return value;
}

}  // namespace

SignPattern::SignPattern(std::vector<std::int8_t> bits) : bits_(std::move(bits)) {
  for (std::int8_t b : bits_) {
    if (b != 1 && b != -1) {
      throw std::invalid_argument("SignPattern: entries must be -1 or +1");
    }
  }
}

SignPattern SignPattern::of_signs(const Eigen::VectorXd& v) {
  SignPattern p;
  p.bits_.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    p.bits_[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(sign_of(v[i]));
  }
  return p;
}

Eigen::VectorXd SignPattern::to_vector() const {
  Eigen::VectorXd v(size());
  for (Eigen::Index i = 0; i < size(); ++i) v[i] = bits_[static_cast<std::size_t>(i)];
  return v;
}

SignPattern SignPattern::negated() const {
  SignPattern p;
  p.bits_.reserve(bits_.size());
  for (std::int8_t b : bits_) p.bits_.push_back(static_cast<std::int8_t>(-b));
  return p;
}

NoiseSpec NoiseSpec::gaussian(double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
  NoiseSpec n;
  n.kind = Kind::gaussian;
  n.sigma = sigma;
  n.seed = seed;
  return n;
}

NoiseSpec NoiseSpec::sign_flip(double flip_prob, std::uint64_t seed) {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) {
    throw std::invalid_argument("NoiseSpec: flip probability must be in [0, 1]");
  }
  NoiseSpec n;
  n.kind = Kind::sign_flip;
  n.flip_prob = flip_prob;
  n.seed = seed;
  return n;
}

MeasurementEnsemble gaussian_matrix(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("gaussian_matrix: dimensions must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd A(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = rng.gaussian();
  }
  return MeasurementEnsemble(std::move(A), seed);
}

SignPattern sign_measure(const MeasurementEnsemble& A, const Eigen::VectorXd& x) {
  check_signal(A, x);
  return SignPattern::of_signs(A.entries() * x);
}

SignPattern noisy_sign_measure(const MeasurementEnsemble& A, const Eigen::VectorXd& x,
                               const NoiseSpec& noise) {
  check_signal(A, x);
  switch (noise.kind) {
    case NoiseSpec::Kind::none:
      return sign_measure(A, x);
    case NoiseSpec::Kind::gaussian: {
      Rng rng(noise.seed);
      Eigen::VectorXd y = A.entries() * x;
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise.sigma * rng.gaussian();
      return SignPattern::of_signs(y);
    }
    case NoiseSpec::Kind::sign_flip: {
      Rng rng(noise.seed);
      std::vector<std::int8_t> bits = sign_measure(A, x).bits();
      for (auto& b : bits) {
        if (rng.uniform() < noise.flip_prob) b = static_cast<std::int8_t>(-b);
      }
      return SignPattern(std::move(bits));
    }
  }
  throw std::logic_error("noisy_sign_measure: unreachable noise kind");
}

double hamming_dist(const SignPattern& b1, const SignPattern& b2) {
  if (b1.size() == 0) throw std::invalid_argument("hamming_dist: empty pattern");
  if (b1.size() != b2.size()) {
    throw std::invalid_argument("hamming_dist: pattern lengths differ");
  }
  Eigen::Index mismatches = 0;
  for (Eigen::Index i = 0; i < b1.size(); ++i) mismatches += (b1[i] != b2[i]);
  return static_cast<double>(mismatches) / static_cast<double>(b1.size());
}

double geodesic_dist(const Eigen::VectorXd& x, const Eigen::VectorXd& s) {
  if (x.size() != s.size()) throw std::invalid_argument("geodesic_dist: lengths differ");
  const double nx = x.norm();
  const double ns = s.norm();
  if (std::abs(nx - 1.0) > kUnitNormTol || std::abs(ns - 1.0) > kUnitNormTol) {
    throw std::invalid_argument("geodesic_dist: inputs must be unit vectors");
  }
  const double half_chord = std::min(0.5 * (x - s).norm(), 1.0);
  return (2.0 / M_PI) * std::asin(half_chord);
}

void save_matrix(const MeasurementEnsemble& A, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_matrix: cannot open " + path.string());
  out.write(kMatrixMagic, sizeof(kMatrixMagic));
  const std::uint64_t header[3] = {static_cast<std::uint64_t>(A.rows()),
                                   static_cast<std::uint64_t>(A.cols()), A.seed()};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      const double v = A.entries()(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  if (!out) throw std::runtime_error("save_matrix: write failed for " + path.string());
}

MeasurementEnsemble load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_matrix: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("load_matrix: bad magic in " + path.string());
  }
  std::uint64_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw std::runtime_error("load_matrix: truncated header in " + path.string());
  const auto m = static_cast<Eigen::Index>(header[0]);
  const auto n = static_cast<Eigen::Index>(header[1]);
  if (m < 1 || n < 1 || m > (1 << 26) || n > (1 << 26)) {
    throw std::runtime_error("load_matrix: implausible dimensions in " + path.string());
  }
  Eigen::MatrixXd A(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      A(i, j) = v;
    }
  }
  if (!in) throw std::runtime_error("load_matrix: truncated payload in " + path.string());
  return MeasurementEnsemble(std::move(A), header[2]);
}

void save_matrix_text(const MeasurementEnsemble& A, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_matrix_text: cannot open " + path.string());
  out << A.rows() << ' ' << A.cols() << ' ' << A.seed() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), A.entries()(i, j),
                                     std::chars_format::general, 17);
      out.write(buf, ptr - buf);
      out.put(j + 1 == A.cols() ? '\n' : ' ');
    }
  }
  if (!out) throw std::runtime_error("save_matrix_text: write failed for " + path.string());
}

MeasurementEnsemble load_matrix_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_matrix_text: cannot open " + path.string());
  std::uint64_t m = 0, n = 0, seed = 0;
  if (!(in >> m >> n >> seed) || m < 1 || n < 1) {
    throw std::runtime_error("load_matrix_text: bad header in " + path.string());
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::string token;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (!(in >> token)) {
        throw std::runtime_error("load_matrix_text: truncated payload in " + path.string());
      }
      A(i, j) = parse_double(token);
    }
  }
  return MeasurementEnsemble(std::move(A), seed);
}

}  // namespace onebit
