#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "onebit/genmodel.hpp"
#include "onebit/measure.hpp"

namespace onebit {

// Knobs shared by range projection and projected gradient descent. The seed
// is a master value; restart r of iteration t draws from streams derived as
// derive_seed(derive_seed(seed, r), t), so reruns with the same config are
// bit-identical and restarts stay independent.
struct RecoveryConfig {
  double step_size = 1.25;  // outer PGD step on the one-sided l1 subgradient
  int outer_iters = 15;
  int restarts = 4;         // independent latent initializations
  int inner_steps = 200;    // Adam budget per projection
  double inner_lr = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RecoveryResult {
  Eigen::VectorXd estimate;
  Eigen::VectorXd latent;      // empty when the solver has no latent space
  double final_loss = 0.0;     // one-sided l1 of `estimate`
  int iterations_run = 0;      // outer iterations executed in the winning restart
  int restart_index = 0;
  std::vector<double> loss_trace;  // per-iterate loss of the winning restart

  std::string to_json() const;
};

// 2 sum_i max(0, -b_i <a_i, x>). Zero exactly when every measurement sign is
// consistent with b (rows with <a_i, x> = 0 contribute zero either way).
double onesided_l1(const MeasurementEnsemble& A, const Eigen::VectorXd& x, const SignPattern& b);

// A^T (sign(Ax) - b) with sign(0) := +1; a subgradient of onesided_l1 in x.
Eigen::VectorXd onesided_l1_subgrad(const MeasurementEnsemble& A, const Eigen::VectorXd& x,
                                    const SignPattern& b);

using ObjectiveGrad = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

// Bias-corrected Adam (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) minimizing
// objective_grad from z0; returns the iterate with the lowest observed value
// (z0 and every post-step iterate are candidates). `constrain`, when given,
// is applied in place after each step, before the iterate is evaluated. The
// seed is part of the interface for stream bookkeeping; the recursion itself
// is deterministic and never draws from it. Throws DivergedError carrying
// the last finite iterate if the objective or gradient leaves the floats.
Eigen::VectorXd adam_minimize(const ObjectiveGrad& objective_grad, Eigen::VectorXd z0, int steps,
                              double lr, std::uint64_t seed = 0,
                              const std::function<void(Eigen::VectorXd&)>& constrain = {});

struct ProjectionResult {
  Eigen::VectorXd point;   // range member closest (or best found) to y
  Eigen::VectorXd latent;  // preimage of point; empty when not recoverable
  double distance = 0.0;   // |point - y|_2
  int restart_index = 0;   // winning initialization; 0 for exact projectors
};

// Euclidean projection of y onto the model range. Models with a
// combinatorial projector are projected exactly (restarts ignored);
// otherwise `restarts` Adam runs minimize |G(z) - y|^2 from uniform starts
// in the latent ball, radially rescaling iterates back onto the ball after
// every step, and the closest result wins. Restarts that diverge or leave
// the model's domain are abandoned; if all of them fail the last error is
// rethrown.
ProjectionResult project_range(const GenerativeModel& model, const Eigen::VectorXd& y,
                               const RecoveryConfig& cfg);

// Projected subgradient descent for one-bit recovery over the model range:
//   x_{t+1} = P_G(x_t + step * A^T (b - sign(A x_t))),  x_0 = 0,
// run once per restart; every projected iterate is scored by onesided_l1 and
// the lowest-loss iterate across restarts is returned. When b makes the very
// first gradient step vanish (x_0 = 0 gives sign(Ax_0) = +1, so b = +1
// zeroes it), the step direction falls back to A^T b, then to e_n, so the
// exact projector is never handed the zero vector.
RecoveryResult pgd_1bit(const MeasurementEnsemble& A, const SignPattern& b,
                        const GenerativeModel& model, const RecoveryConfig& cfg);

// Binary iterative hard thresholding:
//   x_{t+1} = H_s(x_t + (step/2) A^T (b - sign(A x_t))),  x_0 = 0,
// where H_s keeps the s largest-magnitude entries (ties resolved toward the
// lowest index). The final iterate is normalized; per-iterate normalization
// (the other convention in circulation) is available via the flag. If the
// iteration never leaves the origin the direction falls back to H_s(A^T b),
// then to e_1.
Eigen::VectorXd biht(const MeasurementEnsemble& A, const SignPattern& b, int sparsity,
                     double step, int iters, bool normalize_each_iter = false);

}  // namespace onebit
