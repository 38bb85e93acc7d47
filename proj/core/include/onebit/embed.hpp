#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "onebit/genmodel.hpp"
#include "onebit/measure.hpp"
#include "onebit/recover.hpp"

namespace onebit {

// Deviation statistics between geodesic distance on the model range and
// Hamming distance of the corresponding sign patterns.
struct EmbeddingReport {
  Eigen::Index num_pairs = 0;
  double max_dev = 0.0;
  double mean_dev = 0.0;
  std::vector<std::pair<double, double>> quantiles;  // (q, value), nearest-rank
  Eigen::Index m = 0;
  std::string model_id;
  std::uint64_t seed = 0;

  std::string to_json() const;
};

struct LocalEmbeddingReport {
  double epsilon = 0.0;
  Eigen::Index far_count = 0;   // pairs with |x - s|_2 > epsilon
  Eigen::Index near_count = 0;  // pairs with |x - s|_2 <= epsilon
  std::optional<double> far_min_dh;   // absent when no far pairs were seen
  std::optional<double> near_max_dh;  // absent when no near pairs were seen

  std::string to_json() const;
};

// Axis-aligned grid net of the latent ball B_2^k(r): pitch 2*delta/sqrt(k)
// per coordinate, so the nearest grid point of any ball point is within
// delta; grid points just outside the ball are pulled back radially (the
// projection only shrinks distances to interior points).
struct EpsilonNet {
  std::vector<Eigen::VectorXd> points;
  Eigen::Index dim = 0;
  double ball_radius = 0.0;
  double radius = 0.0;              // delta
  double declared_log_bound = 0.0;  // k * log(4 r / delta), optimal-net yardstick

  // True when `probes` uniform ball samples all land within `radius` of some
  // net point (tiny fp slack). Holds by construction for this net.
  bool certify_covering(Eigen::Index probes, std::uint64_t seed) const;

  std::string to_json() const;
};

struct NoisyBoundReport {
  int trials = 0;
  int violations = 0;     // trials where d_S(x, x_hat) > eps_hat + tau1 + tau2
  double epsilon_hat = 0.0;  // max_dev of the paired deviation run
  double tau1_mean = 0.0;    // corruption Hamming distance, averaged
  double tau2_mean = 0.0;    // solver sign-inconsistency, averaged
  double ds_mean = 0.0;
  double min_margin = 0.0;  // min over trials of eps_hat + tau1 + tau2 - d_S

  std::string to_json() const;
};

// |d_S(G(z1), G(z2)) - d_H(sign(A G(z1)), sign(A G(z2)))| for one latent
// pair, with the chord sandwich (|x-s|/pi <= d_S <= |x-s|/2) re-checked
// defensively on every call.
double pair_deviation(const GenerativeModel& model, const MeasurementEnsemble& A,
                      const Eigen::VectorXd& z1, const Eigen::VectorXd& z2);

// Samples num_pairs latent pairs uniformly in the ball (pair p draws both
// latents from the stream derive_seed(seed, p)), maps them through the model
// and aggregates |d_S - d_H|. The model must produce unit-norm outputs.
EmbeddingReport bese_deviation(const GenerativeModel& model, const MeasurementEnsemble& A,
                               Eigen::Index num_pairs, std::uint64_t seed);

// Same sampling, but pairs are split at |x - s|_2 = epsilon and the extreme
// Hamming distances of each side are reported: the far minimum probes for
// collisions, the near maximum for Hamming blow-ups.
LocalEmbeddingReport local_embedding_check(const GenerativeModel& model,
                                           const MeasurementEnsemble& A, double epsilon,
                                           Eigen::Index num_pairs, std::uint64_t seed);

// Frequency of {<a,x> > eps/12 and <a,s> < -eps/12} over fresh standard
// normal vectors a. Requires |x - s|_2 >= eps.
double verify_sep_lemma(const Eigen::VectorXd& x, const Eigen::VectorXd& s, double epsilon,
                        Eigen::Index trials, std::uint64_t seed);

// Frequency of {both inner products > eps/12} or {both < -eps/12} over fresh
// standard normal vectors. Requires 0 < eps and |x - s|_2 <= eps.
double verify_sep_lemma_near(const Eigen::VectorXd& x, const Eigen::VectorXd& s, double epsilon,
                             Eigen::Index trials, std::uint64_t seed);

// Mean Hamming distance between sign patterns of x and s over `trials` fresh
// m-row Gaussian matrices; concentrates on d_S(x, s).
double verify_sign_flip_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& s, Eigen::Index m,
                             Eigen::Index trials, std::uint64_t seed);

// Frequency of (1-eps)|x|^2 <= |Ax|^2/m <= (1+eps)|x|^2 over `trials` fresh
// m-row Gaussian matrices.
double verify_norm_preservation(const Eigen::VectorXd& x, Eigen::Index m, double epsilon,
                                Eigen::Index trials, std::uint64_t seed);

// Number of random unit pairs in R^n violating the exact sandwich
// |x-s|/pi <= d_S(x,s) <= |x-s|/2. Zero for a correct distance kernel.
Eigen::Index verify_metric_sandwich(Eigen::Index n, Eigen::Index num_pairs, std::uint64_t seed);

// Grid net of B_2^k(r) with covering radius delta; k <= 3 and a point budget
// of (4r/delta)^k <= 1e7 keep this at desk scale (ResourceLimitError beyond).
EpsilonNet build_epsilon_net(Eigen::Index k, double r, double delta);

// Per trial: plant x = G(z), corrupt the measurements per `noise`, solve with
// pgd_1bit, and test d_S(x, x_hat) <= eps_hat + tau1 + tau2, where eps_hat is
// the max deviation of a paired bese_deviation run on the same (model, A),
// tau1 the corruption level and tau2 the solver's residual sign error.
// `solver` currently must be "pgd1bit" (the bound concerns range-valued
// estimates).
NoisyBoundReport noisy_bound_check(const GenerativeModel& model, const MeasurementEnsemble& A,
                                   const NoiseSpec& noise, const std::string& solver,
                                   const RecoveryConfig& config, int trials, std::uint64_t seed,
                                   Eigen::Index bese_pairs = 2000);

}  // namespace onebit
