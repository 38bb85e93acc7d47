#include "onebit/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "onebit/errors.hpp"

namespace onebit {

namespace {

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double tau) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]) - tau;
    out[i] = mag > 0.0 ? (v[i] > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

/**
 * Dense tableau simplex for min c'w s.t. T w = rhs, w >= 0. The reduced-cost
 * row is carried in the tableau and updated by the same eliminations, so
 * pricing is O(cols) per pivot. Entering column by Dantzig's rule (most
 * negative reduced cost); after a run of degenerate pivots the rule drops to
 * Bland's (lowest eligible index), which rules out cycling on the heavily
 * degenerate tableaus the one-bit constraints produce. Among minimum-ratio
 * rows the lowest basic index leaves. `basis` must start as one basic column
 * per row with the corresponding submatrix already reduced to the identity
 * and a nonnegative rhs; T, rhs and basis are updated in place. On return
 * `reduced_out`, when given, receives the final reduced-cost row (the dual
 * solution lives in its slack entries). Returns the optimal objective.
 */
double simplex_min(Eigen::MatrixXd& T, Eigen::VectorXd& rhs, const Eigen::VectorXd& c,
                   std::vector<Eigen::Index>& basis, Eigen::RowVectorXd* reduced_out = nullptr) {
  constexpr double kReducedCostTol = 1e-9;
  constexpr double kPivotTol = 1e-11;
  const Eigen::Index rows = T.rows();
  const Eigen::Index cols = T.cols();
  const long max_pivots = 50000L + 200L * static_cast<long>(rows + cols);
  const long stall_limit = 64L + static_cast<long>(rows);

  Eigen::RowVectorXd reduced = c.transpose();
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double cb = c[basis[static_cast<std::size_t>(i)]];
    if (cb != 0.0) reduced -= cb * T.row(i);
  }

  bool bland = false;
  long degenerate_run = 0;
  for (long pivot = 0; pivot < max_pivots; ++pivot) {
    Eigen::Index entering = -1;
    if (bland) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (reduced[j] < -kReducedCostTol) {
          entering = j;
          break;
        }
      }
    } else {
      double most_negative = -kReducedCostTol;
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (reduced[j] < most_negative) {
          most_negative = reduced[j];
          entering = j;
        }
      }
    }
    if (entering < 0) {
      double value = 0.0;
      for (Eigen::Index i = 0; i < rows; ++i) value += c[basis[static_cast<std::size_t>(i)]] * rhs[i];
      if (reduced_out) *reduced_out = reduced;
      return value;
    }

    Eigen::Index leaving = -1;
    double best_ratio = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (T(i, entering) <= kPivotTol) continue;
      const double ratio = rhs[i] / T(i, entering);
      if (leaving < 0 || ratio < best_ratio - kPivotTol ||
          (std::abs(ratio - best_ratio) <= kPivotTol &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leaving)])) {
        leaving = i;
        best_ratio = ratio;
      }
    }
    if (leaving < 0) throw std::runtime_error("simplex: objective unbounded below");

    if (best_ratio <= kPivotTol) {
      if (++degenerate_run > stall_limit) bland = true;  // anti-cycling fallback
    } else {
      degenerate_run = 0;
    }

    const double pivot_value = T(leaving, entering);
    T.row(leaving) /= pivot_value;
    rhs[leaving] /= pivot_value;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i == leaving) continue;
      const double factor = T(i, entering);
      if (factor != 0.0) {
        T.row(i) -= factor * T.row(leaving);
        rhs[i] -= factor * rhs[leaving];
      }
    }
    const double rc = reduced[entering];
    if (rc != 0.0) reduced -= rc * T.row(leaving);
    reduced[entering] = 0.0;
    basis[static_cast<std::size_t>(leaving)] = entering;
    if (rhs[leaving] < 0.0) rhs[leaving] = 0.0;  // clip pivot round-off
  }
  throw std::runtime_error("simplex: pivot limit exceeded");
}

// Shared solver for the exact and hinge-relaxed one-bit programs
//   min |x|_1  (+ penalty*|h|_1)  s.t.  b_i a_i'x >= 0 (>= -h_i),  sum_i b_i a_i'x = m.
// The program is solved through its dual
//   max m*v  s.t.  |(B'(u + v*1))_j| <= 1,  u >= 0  (u <= penalty when relaxed),
// with B = diag(b) A, whose all-slack starting basis is already feasible (no
// phase 1) and whose 2n (+m) rows sidestep the extreme degeneracy of the m+1
// primal rows (every primal rhs is zero except the sum row). The primal
// solution is read off the reduced-cost row: x_j is the multiplier pair of
// the two |.| <= 1 rows for coordinate j. A primal infeasible instance shows
// up as an unbounded dual objective.
Eigen::VectorXd solve_onebit_lp(const MeasurementEnsemble& A, const SignPattern& b,
                                bool relaxed, double penalty) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (b.size() != m) {
    throw std::invalid_argument("lasso_1bit: sign pattern length does not match rows");
  }
  if (m < 1 || n < 1) throw std::invalid_argument("lasso_1bit: empty measurement ensemble");

  const Eigen::Index rows = 2 * n + (relaxed ? m : 0);
  const Eigen::Index cols = m + 2 + rows;  // u, v+, v-, one slack per row
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(rows);
  const Eigen::VectorXd g = A.entries().transpose() * b.to_vector();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = static_cast<double>(b[i]) * A.entries()(i, j);
      T(j, i) = v;
      T(n + j, i) = -v;
    }
    T(j, m) = g[j];
    T(j, m + 1) = -g[j];
    T(n + j, m) = -g[j];
    T(n + j, m + 1) = g[j];
    T(j, m + 2 + j) = 1.0;
    T(n + j, m + 2 + n + j) = 1.0;
  }
  if (relaxed) {
    for (Eigen::Index i = 0; i < m; ++i) {
      T(2 * n + i, i) = 1.0;
      T(2 * n + i, m + 2 + 2 * n + i) = 1.0;
      rhs[2 * n + i] = penalty;
    }
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  cost[m] = -static_cast<double>(m);
  cost[m + 1] = static_cast<double>(m);

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = m + 2 + i;

  Eigen::RowVectorXd reduced;
  try {
    simplex_min(T, rhs, cost, basis, &reduced);
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).find("unbounded") != std::string::npos) {
      throw InfeasibleError("lasso_1bit: sign constraints are infeasible");
    }
    throw;
  }

  Eigen::VectorXd x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x[j] = reduced[m + 2 + j] - reduced[m + 2 + n + j];
  }
  return x;
}

}  // namespace

Eigen::VectorXd lasso_linear(const MeasurementEnsemble& A, const Eigen::VectorXd& y, double reg,
                             LassoInfo* info) {
  if (y.size() != A.rows()) {
    throw std::invalid_argument("lasso_linear: target length does not match rows");
  }
  if (reg < 0.0) throw std::invalid_argument("lasso_linear: reg must be >= 0");
  constexpr int kMaxIters = 10000;
  const Eigen::MatrixXd& M = A.entries();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
  Eigen::VectorXd v = x;  // extrapolated point
  double t_mom = 1.0;
  auto smooth = [&](const Eigen::VectorXd& res) { return 0.5 * res.squaredNorm(); };
  Eigen::VectorXd residual = -y;  // M x - y at x = 0
  double objective = smooth(residual) + reg * x.lpNorm<1>();
  double lip = 1.0;
  const double grad_scale = y.size() > 0 ? (M.transpose() * y).cwiseAbs().maxCoeff() : 0.0;
  const double stop_tol = 1e-11 * std::max(1.0, grad_scale);

  // One backtracked proximal step from `base`; returns the step and the
  // smooth value at the new point, growing lip until the quadratic model
  // dominates.
  auto prox_step = [&](const Eigen::VectorXd& base, Eigen::VectorXd& x_next,
                       Eigen::VectorXd& res_next, double& f_next) {
    const Eigen::VectorXd res_base = M * base - y;
    const double f_base = smooth(res_base);
    const Eigen::VectorXd grad = M.transpose() * res_base;
    for (;;) {
      x_next = soft_threshold(base - grad / lip, reg / lip);
      res_next = M * x_next - y;
      f_next = smooth(res_next);
      const Eigen::VectorXd dx = x_next - base;
      if (f_next <= f_base + grad.dot(dx) + 0.5 * lip * dx.squaredNorm() + 1e-14) break;
      lip *= 2.0;
      if (lip > 1e18) throw std::runtime_error("lasso_linear: backtracking failed");
    }
  };

  int it = 0;
  bool converged = false;
  for (; it < kMaxIters; ++it) {
    Eigen::VectorXd x_next;
    Eigen::VectorXd res_next;
    double f_next;
    Eigen::VectorXd base = v;
    prox_step(base, x_next, res_next, f_next);
    double objective_next = f_next + reg * x_next.lpNorm<1>();
    if (objective_next > objective + 1e-14) {
      // The extrapolation overshot; retake the step from the incumbent,
      // which the majorization guarantees to descend, and drop the momentum.
      t_mom = 1.0;
      base = x;
      prox_step(base, x_next, res_next, f_next);
      objective_next = f_next + reg * x_next.lpNorm<1>();
    }
    const double step_norm = lip * (x_next - base).cwiseAbs().maxCoeff();
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    v = x_next + ((t_mom - 1.0) / t_next) * (x_next - x);
    t_mom = t_next;
    x = std::move(x_next);
    residual = std::move(res_next);
    objective = objective_next;
    if (step_norm <= stop_tol) {
      converged = true;
      ++it;
      break;
    }
  }
  if (info) {
    info->iterations = it;
    info->objective = objective;
    info->residual_norm = residual.norm();
    info->converged = converged;
  }
  return x;
}

Eigen::VectorXd lasso_1bit(const MeasurementEnsemble& A, const SignPattern& b) {
  return solve_onebit_lp(A, b, false, 0.0);
}

Eigen::VectorXd lasso_1bit_relaxed(const MeasurementEnsemble& A, const SignPattern& b,
                                   double penalty) {
  if (!(penalty > 0.0)) throw std::invalid_argument("lasso_1bit_relaxed: penalty must be > 0");
  return solve_onebit_lp(A, b, true, penalty);
}

}  // namespace onebit
