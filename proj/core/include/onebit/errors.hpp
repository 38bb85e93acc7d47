#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace onebit {

// Thrown when an iterative optimizer hits a non-finite objective or gradient.
// Carries the last iterate with a finite objective so callers can still
// report something useful for the row that failed.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, Eigen::VectorXd last_finite)
      : std::runtime_error(what), last_finite_(std::move(last_finite)) {}

  const Eigen::VectorXd& last_finite_iterate() const { return last_finite_; }

 private:
  Eigen::VectorXd last_finite_;
};

// Thrown when a linear program has no feasible point within tolerance.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a combinatorial construction would exceed its point budget.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown on malformed configuration files or config contents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace onebit
