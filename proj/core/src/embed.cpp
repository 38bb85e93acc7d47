#include "onebit/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "onebit/errors.hpp"
#include "onebit/rng.hpp"

namespace onebit {

namespace {

constexpr double kSandwichSlack = 1e-12;

void require_unit(const Eigen::VectorXd& v, const char* who) {
  if (std::abs(v.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(who) + ": vector is not unit norm");
  }
}

void require_embedding_inputs(const GenerativeModel& model, const MeasurementEnsemble& A,
                              Eigen::Index num_pairs, const char* who) {
  if (!model.normalized()) {
    throw std::invalid_argument(std::string(who) + ": model range must lie on the unit sphere");
  }
  if (A.cols() != model.ambient_dim()) {
    throw std::invalid_argument(std::string(who) + ": matrix columns do not match the model");
  }
  if (num_pairs < 1) throw std::invalid_argument(std::string(who) + ": num_pairs must be >= 1");
}

// Nearest-rank quantile of an already sorted sample.
double sorted_quantile(const std::vector<double>& sorted, double q) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  if (rank < 1) rank = 1;
  if (rank > sorted.size()) rank = sorted.size();
  return sorted[rank - 1];
}

void check_sandwich(double chord, double ds, const char* who) {
  if (ds < chord / M_PI - kSandwichSlack || ds > chord / 2.0 + kSandwichSlack) {
    throw std::logic_error(std::string(who) + ": geodesic/chord sandwich violated");
  }
}

}  // namespace

std::string EmbeddingReport::to_json() const {
  nlohmann::json j;
  j["num_pairs"] = num_pairs;
  j["max_dev"] = max_dev;
  j["mean_dev"] = mean_dev;
  nlohmann::json q = nlohmann::json::array();
  for (const auto& [prob, value] : quantiles) q.push_back({{"q", prob}, {"value", value}});
  j["quantiles"] = std::move(q);
  j["m"] = m;
  j["model_id"] = model_id;
  j["seed"] = seed;
  return j.dump();
}

std::string LocalEmbeddingReport::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["far_count"] = far_count;
  j["near_count"] = near_count;
  j["far_min_dh"] = far_min_dh ? nlohmann::json(*far_min_dh) : nlohmann::json(nullptr);
  j["near_max_dh"] = near_max_dh ? nlohmann::json(*near_max_dh) : nlohmann::json(nullptr);
  return j.dump();
}

std::string EpsilonNet::to_json() const {
  nlohmann::json j;
  j["dim"] = dim;
  j["ball_radius"] = ball_radius;
  j["radius"] = radius;
  j["cardinality"] = points.size();
  j["log_cardinality"] = points.empty() ? 0.0 : std::log(static_cast<double>(points.size()));
  j["declared_log_bound"] = declared_log_bound;
  return j.dump();
}

std::string NoisyBoundReport::to_json() const {
  nlohmann::json j;
  j["trials"] = trials;
  j["violations"] = violations;
  j["epsilon_hat"] = epsilon_hat;
  j["tau1_mean"] = tau1_mean;
  j["tau2_mean"] = tau2_mean;
  j["ds_mean"] = ds_mean;
  j["min_margin"] = min_margin;
  return j.dump();
}

double pair_deviation(const GenerativeModel& model, const MeasurementEnsemble& A,
                      const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) {
  const Eigen::VectorXd x = model.forward(z1);
  const Eigen::VectorXd s = model.forward(z2);
  const double ds = geodesic_dist(x, s);
  check_sandwich((x - s).norm(), ds, "pair_deviation");
  const double dh = hamming_dist(sign_measure(A, x), sign_measure(A, s));
  return std::abs(ds - dh);
}

EmbeddingReport bese_deviation(const GenerativeModel& model, const MeasurementEnsemble& A,
                               Eigen::Index num_pairs, std::uint64_t seed) {
  require_embedding_inputs(model, A, num_pairs, "bese_deviation");
  const Eigen::Index k = model.latent_dim();
  const double r = model.latent_radius();

  std::vector<double> devs;
  devs.reserve(static_cast<std::size_t>(num_pairs));
  double total = 0.0;
  for (Eigen::Index p = 0; p < num_pairs; ++p) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    const Eigen::VectorXd z1 = rng.uniform_ball(k, r);
    const Eigen::VectorXd z2 = rng.uniform_ball(k, r);
    const double dev = pair_deviation(model, A, z1, z2);
    devs.push_back(dev);
    total += dev;
  }

  EmbeddingReport report;
  report.num_pairs = num_pairs;
  report.mean_dev = total / static_cast<double>(num_pairs);
  std::sort(devs.begin(), devs.end());
  report.max_dev = devs.back();
  for (double q : {0.5, 0.9, 0.95, 0.99}) {
    report.quantiles.emplace_back(q, sorted_quantile(devs, q));
  }
  report.m = A.rows();
  report.model_id = model.describe();
  report.seed = seed;
  return report;
}

LocalEmbeddingReport local_embedding_check(const GenerativeModel& model,
                                           const MeasurementEnsemble& A, double epsilon,
                                           Eigen::Index num_pairs, std::uint64_t seed) {
  require_embedding_inputs(model, A, num_pairs, "local_embedding_check");
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("local_embedding_check: epsilon must be > 0");
  }
  const Eigen::Index k = model.latent_dim();
  const double r = model.latent_radius();

  LocalEmbeddingReport report;
  report.epsilon = epsilon;
  for (Eigen::Index p = 0; p < num_pairs; ++p) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    const Eigen::VectorXd x = model.forward(rng.uniform_ball(k, r));
    const Eigen::VectorXd s = model.forward(rng.uniform_ball(k, r));
    const double dh = hamming_dist(sign_measure(A, x), sign_measure(A, s));
    if ((x - s).norm() > epsilon) {
      ++report.far_count;
      if (!report.far_min_dh || dh < *report.far_min_dh) report.far_min_dh = dh;
    } else {
      ++report.near_count;
      if (!report.near_max_dh || dh > *report.near_max_dh) report.near_max_dh = dh;
    }
  }
  return report;
}

double verify_sep_lemma(const Eigen::VectorXd& x, const Eigen::VectorXd& s, double epsilon,
                        Eigen::Index trials, std::uint64_t seed) {
  require_unit(x, "verify_sep_lemma");
  require_unit(s, "verify_sep_lemma");
  if (x.size() != s.size()) throw std::invalid_argument("verify_sep_lemma: length mismatch");
  if (trials < 1) throw std::invalid_argument("verify_sep_lemma: trials must be >= 1");
  if ((x - s).norm() < epsilon - 1e-12) {
    throw std::invalid_argument("verify_sep_lemma: pair is closer than epsilon");
  }
  const double level = epsilon / 12.0;
  Eigen::Index hits = 0;
  for (Eigen::Index t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Eigen::VectorXd a = rng.gaussian_vector(x.size());
    if (a.dot(x) > level && a.dot(s) < -level) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double verify_sep_lemma_near(const Eigen::VectorXd& x, const Eigen::VectorXd& s, double epsilon,
                             Eigen::Index trials, std::uint64_t seed) {
  require_unit(x, "verify_sep_lemma_near");
  require_unit(s, "verify_sep_lemma_near");
  if (x.size() != s.size()) throw std::invalid_argument("verify_sep_lemma_near: length mismatch");
  if (trials < 1) throw std::invalid_argument("verify_sep_lemma_near: trials must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("verify_sep_lemma_near: epsilon must be > 0");
  if ((x - s).norm() > epsilon + 1e-12) {
    throw std::invalid_argument("verify_sep_lemma_near: pair is farther than epsilon");
  }
  const double level = epsilon / 12.0;
  Eigen::Index hits = 0;
  for (Eigen::Index t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Eigen::VectorXd a = rng.gaussian_vector(x.size());
    const double px = a.dot(x);
    const double ps = a.dot(s);
    if ((px > level && ps > level) || (px < -level && ps < -level)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double verify_sign_flip_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& s, Eigen::Index m,
                             Eigen::Index trials, std::uint64_t seed) {
  require_unit(x, "verify_sign_flip_prob");
  require_unit(s, "verify_sign_flip_prob");
  if (x.size() != s.size()) throw std::invalid_argument("verify_sign_flip_prob: length mismatch");
  if (m < 1 || trials < 1) {
    throw std::invalid_argument("verify_sign_flip_prob: m and trials must be >= 1");
  }
  double total = 0.0;
  for (Eigen::Index t = 0; t < trials; ++t) {
    const MeasurementEnsemble A =
        gaussian_matrix(m, x.size(), derive_seed(seed, static_cast<std::uint64_t>(t)));
    total += hamming_dist(sign_measure(A, x), sign_measure(A, s));
  }
  return total / static_cast<double>(trials);
}

double verify_norm_preservation(const Eigen::VectorXd& x, Eigen::Index m, double epsilon,
                                Eigen::Index trials, std::uint64_t seed) {
  if (x.size() < 1) throw std::invalid_argument("verify_norm_preservation: empty vector");
  if (m < 1 || trials < 1) {
    throw std::invalid_argument("verify_norm_preservation: m and trials must be >= 1");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("verify_norm_preservation: epsilon must be in (0, 1)");
  }
  const double sq = x.squaredNorm();
  Eigen::Index hits = 0;
  for (Eigen::Index t = 0; t < trials; ++t) {
    const MeasurementEnsemble A =
        gaussian_matrix(m, x.size(), derive_seed(seed, static_cast<std::uint64_t>(t)));
    const double scaled = (A.entries() * x).squaredNorm() / static_cast<double>(m);
    if (scaled >= (1.0 - epsilon) * sq && scaled <= (1.0 + epsilon) * sq) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

Eigen::Index verify_metric_sandwich(Eigen::Index n, Eigen::Index num_pairs, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("verify_metric_sandwich: n must be >= 1");
  if (num_pairs < 1) throw std::invalid_argument("verify_metric_sandwich: num_pairs must be >= 1");
  Eigen::Index violations = 0;
  for (Eigen::Index p = 0; p < num_pairs; ++p) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    const Eigen::VectorXd x = rng.gaussian_vector(n).normalized();
    const Eigen::VectorXd s = rng.gaussian_vector(n).normalized();
    const double chord = (x - s).norm();
    const double ds = geodesic_dist(x, s);
    if (!(chord / M_PI <= ds && ds <= chord / 2.0)) ++violations;
  }
  return violations;
}

bool EpsilonNet::certify_covering(Eigen::Index probes, std::uint64_t seed) const {
  if (points.empty()) return false;
  const double limit_sq = radius * radius * (1.0 + 1e-9);
  for (Eigen::Index p = 0; p < probes; ++p) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    const Eigen::VectorXd z = rng.uniform_ball(dim, ball_radius);
    bool covered = false;
    for (const Eigen::VectorXd& pt : points) {
      if ((z - pt).squaredNorm() <= limit_sq) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

EpsilonNet build_epsilon_net(Eigen::Index k, double r, double delta) {
  if (k < 1 || k > 3) throw std::invalid_argument("build_epsilon_net: k must be in {1, 2, 3}");
  if (!(r > 0.0)) throw std::invalid_argument("build_epsilon_net: r must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("build_epsilon_net: delta must be > 0");

  EpsilonNet net;
  net.dim = k;
  net.ball_radius = r;
  net.radius = delta;
  net.declared_log_bound = static_cast<double>(k) * std::log(4.0 * r / delta);

  if (delta >= r) {
    net.points.push_back(Eigen::VectorXd::Zero(k));
    return net;
  }
  if (std::pow(4.0 * r / delta, static_cast<double>(k)) > 1e7) {
    throw ResourceLimitError("build_epsilon_net: grid would exceed the 1e7 point budget");
  }

  const double pitch = 2.0 * delta / std::sqrt(static_cast<double>(k));
  const auto reach = static_cast<long>(std::floor(r / pitch + 0.5));
  const double keep_sq = (r + delta) * (r + delta) * (1.0 + 1e-12);

  std::vector<long> idx(static_cast<std::size_t>(k), -reach);
  Eigen::VectorXd g(k);
  for (;;) {
    for (Eigen::Index i = 0; i < k; ++i) {
      g[i] = static_cast<double>(idx[static_cast<std::size_t>(i)]) * pitch;
    }
    const double norm_sq = g.squaredNorm();
    if (norm_sq <= keep_sq) {
      if (norm_sq > r * r) {
        net.points.push_back(g * (r / std::sqrt(norm_sq)));
      } else {
        net.points.push_back(g);
      }
    }
    Eigen::Index carry = 0;
    while (carry < k && ++idx[static_cast<std::size_t>(carry)] > reach) {
      idx[static_cast<std::size_t>(carry)] = -reach;
      ++carry;
    }
    if (carry == k) break;
  }
  return net;
}

NoisyBoundReport noisy_bound_check(const GenerativeModel& model, const MeasurementEnsemble& A,
                                   const NoiseSpec& noise, const std::string& solver,
                                   const RecoveryConfig& config, int trials, std::uint64_t seed,
                                   Eigen::Index bese_pairs) {
  require_embedding_inputs(model, A, bese_pairs, "noisy_bound_check");
  if (trials < 1) throw std::invalid_argument("noisy_bound_check: trials must be >= 1");
  if (solver != "pgd1bit") {
    throw std::invalid_argument("noisy_bound_check: only the pgd1bit solver yields range-valued "
                                "estimates for the composite bound");
  }

  NoisyBoundReport report;
  report.trials = trials;
  report.epsilon_hat = bese_deviation(model, A, bese_pairs, derive_seed(seed, 0)).max_dev;

  const Eigen::Index k = model.latent_dim();
  const double r = model.latent_radius();
  double min_margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(t) + 1);
    Rng rng(derive_seed(trial_seed, 0));
    const Eigen::VectorXd x = model.forward(rng.uniform_ball(k, r));
    const SignPattern clean = sign_measure(A, x);
    NoiseSpec trial_noise = noise;
    trial_noise.seed = derive_seed(trial_seed, 1);
    const SignPattern corrupted = noisy_sign_measure(A, x, trial_noise);
    const double tau1 = hamming_dist(clean, corrupted);

    RecoveryConfig trial_cfg = config;
    trial_cfg.seed = derive_seed(trial_seed, 2);
    const RecoveryResult res = pgd_1bit(A, corrupted, model, trial_cfg);
    const double tau2 = hamming_dist(sign_measure(A, res.estimate), corrupted);
    const double ds = geodesic_dist(x, res.estimate);

    const double margin = report.epsilon_hat + tau1 + tau2 - ds;
    min_margin = std::min(min_margin, margin);
    if (ds > report.epsilon_hat + tau1 + tau2 + 1e-12) ++report.violations;
    report.tau1_mean += tau1;
    report.tau2_mean += tau2;
    report.ds_mean += ds;
  }
  report.tau1_mean /= trials;
  report.tau2_mean /= trials;
  report.ds_mean /= trials;
  report.min_margin = min_margin;
  return report;
}

}  // namespace onebit
