#pragma once

#include <Eigen/Dense>

#include "onebit/measure.hpp"

namespace onebit {

struct LassoInfo {
  int iterations = 0;
  double objective = 0.0;
  double residual_norm = 0.0;  // |Ax - y|_2 at the solution
  bool converged = false;
};

// min 0.5 |Ax - y|^2 + reg |x|_1 via accelerated proximal gradient with a
// backtracking majorization step and a monotone restart (an extrapolated
// step that raises the objective is retaken from the incumbent with the
// momentum reset). Stops when the prox-gradient map at the step's base
// point falls below 1e-11 * max(1, |A'y|_inf) in the max norm, or after
// 10^4 iterations. reg = 0 reduces to plain least squares. The residual in
// `info` makes the gap to the equality-constrained program observable.
Eigen::VectorXd lasso_linear(const MeasurementEnsemble& A, const Eigen::VectorXd& y, double reg,
                             LassoInfo* info = nullptr);

// min |x|_1 subject to b_i <a_i, x> >= 0 for all i and sum_i b_i <a_i, x> = m.
// The two constraints together force |Ax|_1 = m with signs matching b.
// Solved through the LP dual (which starts feasible from the slack basis) by
// a dense simplex; the primal solution is read off the final reduced costs.
// Throws InfeasibleError when the constraints admit no point, which can
// happen for noise-corrupted b.
Eigen::VectorXd lasso_1bit(const MeasurementEnsemble& A, const SignPattern& b);

// Fallback when lasso_1bit is infeasible:
// min |x|_1 + penalty * sum_i max(0, -b_i <a_i, x>)  s.t.  sum_i b_i <a_i, x> = m.
Eigen::VectorXd lasso_1bit_relaxed(const MeasurementEnsemble& A, const SignPattern& b,
                                   double penalty = 100.0);

}  // namespace onebit
