#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "onebit/measure.hpp"
#include "onebit/rng.hpp"

namespace testutil {

inline onebit::MeasurementEnsemble make_ensemble(
    std::initializer_list<std::initializer_list<double>> rows, std::uint64_t seed = 0) {
  Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  Eigen::Index n = static_cast<Eigen::Index>(rows.begin()->size());
  Eigen::MatrixXd a(m, n);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) a(i, j++) = v;
    ++i;
  }
  return onebit::MeasurementEnsemble(std::move(a), seed);
}

inline Eigen::VectorXd make_vector(std::initializer_list<double> entries) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(entries.size()));
  Eigen::Index i = 0;
  for (double e : entries) v[i++] = e;
  return v;
}

inline Eigen::VectorXd random_unit(Eigen::Index n, std::uint64_t seed) {
  onebit::Rng rng(seed);
  Eigen::VectorXd v = rng.gaussian_vector(n);
  while (v.norm() < 1e-12) v = rng.gaussian_vector(n);
  return v / v.norm();
}

// P(N(0,1) > t)
inline double normal_tail(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  if (v.size() % 2 == 1) return v[h];
  return 0.5 * (v[h - 1] + v[h]);
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("onebit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline std::string read_file(const std::filesystem::path& p) {
  std::string out;
  FILE* f = std::fopen(p.string().c_str(), "rb");
  if (!f) return out;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, got);
  std::fclose(f);
  return out;
}

}  // namespace testutil
