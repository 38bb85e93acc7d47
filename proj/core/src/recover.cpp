#include "onebit/recover.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "onebit/errors.hpp"
#include "onebit/rng.hpp"

namespace onebit {

namespace {

Eigen::VectorXd signs_of(const Eigen::VectorXd& v) {
  Eigen::VectorXd s(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) s[i] = v[i] >= 0.0 ? 1.0 : -1.0;
  return s;
}

void check_dims(const MeasurementEnsemble& A, const Eigen::VectorXd& x, const SignPattern& b,
                const char* who) {
  if (x.size() != A.cols()) {
    throw std::invalid_argument(std::string(who) + ": signal length does not match columns");
  }
  if (b.size() != A.rows()) {
    throw std::invalid_argument(std::string(who) + ": sign pattern length does not match rows");
  }
}

// Keep the s largest-magnitude entries, ties toward the lowest index.
Eigen::VectorXd hard_threshold(const Eigen::VectorXd& v, int s) {
  const Eigen::Index n = v.size();
  if (s >= n) return v;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::partial_sort(order.begin(), order.begin() + s, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double ma = std::abs(v[a]);
                      const double mb = std::abs(v[b]);
                      return ma > mb || (ma == mb && a < b);
                    });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < s; ++i) out[order[static_cast<std::size_t>(i)]] = v[order[static_cast<std::size_t>(i)]];
  return out;
}

}  // namespace

void RecoveryConfig::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("RecoveryConfig: step_size must be > 0");
  if (outer_iters < 1) throw std::invalid_argument("RecoveryConfig: outer_iters must be >= 1");
  if (restarts < 1) throw std::invalid_argument("RecoveryConfig: restarts must be >= 1");
  if (inner_steps < 1) throw std::invalid_argument("RecoveryConfig: inner_steps must be >= 1");
  if (!(inner_lr > 0.0)) throw std::invalid_argument("RecoveryConfig: inner_lr must be > 0");
}

std::string RecoveryResult::to_json() const {
  nlohmann::json j;
  j["estimate"] = std::vector<double>(estimate.data(), estimate.data() + estimate.size());
  j["latent"] = std::vector<double>(latent.data(), latent.data() + latent.size());
  j["final_loss"] = final_loss;
  j["iterations_run"] = iterations_run;
  j["restart_index"] = restart_index;
  j["loss_trace"] = loss_trace;
  return j.dump();
}

double onesided_l1(const MeasurementEnsemble& A, const Eigen::VectorXd& x, const SignPattern& b) {
  check_dims(A, x, b, "onesided_l1");
  const Eigen::VectorXd ax = A.entries() * x;
  double total = 0.0;
  for (Eigen::Index i = 0; i < ax.size(); ++i) {
    total += std::max(0.0, -static_cast<double>(b[i]) * ax[i]);
  }
  return 2.0 * total;
}

Eigen::VectorXd onesided_l1_subgrad(const MeasurementEnsemble& A, const Eigen::VectorXd& x,
                                    const SignPattern& b) {
  check_dims(A, x, b, "onesided_l1_subgrad");
  const Eigen::VectorXd ax = A.entries() * x;
  return A.entries().transpose() * (signs_of(ax) - b.to_vector());
}

Eigen::VectorXd adam_minimize(const ObjectiveGrad& objective_grad, Eigen::VectorXd z0, int steps,
                              double lr, std::uint64_t /*seed*/,
                              const std::function<void(Eigen::VectorXd&)>& constrain) {
  if (steps < 1) throw std::invalid_argument("adam_minimize: steps must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("adam_minimize: lr must be > 0");
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  Eigen::VectorXd z = std::move(z0);
  auto [value, grad] = objective_grad(z);
  if (!std::isfinite(value) || !grad.allFinite()) {
    throw DivergedError("adam_minimize: non-finite objective at the start", z);
  }

  Eigen::VectorXd best = z;
  double best_value = value;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(z.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(z.size());
  double b1t = 1.0;
  double b2t = 1.0;

  for (int t = 1; t <= steps; ++t) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    b1t *= beta1;
    b2t *= beta2;
    const Eigen::VectorXd m_hat = m / (1.0 - b1t);
    const Eigen::VectorXd v_hat = v / (1.0 - b2t);
    const Eigen::VectorXd last_finite = z;
    z -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    if (constrain) constrain(z);
    std::tie(value, grad) = objective_grad(z);
    if (!std::isfinite(value) || !grad.allFinite()) {
      throw DivergedError("adam_minimize: non-finite objective at step " + std::to_string(t),
                          last_finite);
    }
    if (value < best_value) {
      best_value = value;
      best = z;
    }
  }
  return best;
}

ProjectionResult project_range(const GenerativeModel& model, const Eigen::VectorXd& y,
                               const RecoveryConfig& cfg) {
  cfg.validate();
  if (y.size() != model.ambient_dim()) {
    throw std::invalid_argument("project_range: target length does not match the model");
  }

  if (model.has_exact_projector()) {
    ProjectionResult res;
    res.point = model.exact_project(y);
    if (const auto* gs = dynamic_cast<const GroupSparseModel*>(&model)) {
      res.latent = gs->latent_preimage(res.point);
    }
    res.distance = (res.point - y).norm();
    res.restart_index = 0;
    return res;
  }
  if (!model.supports_vjp()) {
    throw std::invalid_argument(
        "project_range: model provides neither gradients nor an exact projector");
  }

  const double radius = model.latent_radius();
  const auto objective = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd res = model.forward(z) - y;
    return std::make_pair(res.squaredNorm(), Eigen::VectorXd(2.0 * model.vjp(z, res)));
  };
  const auto keep_in_ball = [radius](Eigen::VectorXd& z) {
    const double norm = z.norm();
    if (norm > radius) z *= radius / norm;
  };

  ProjectionResult best;
  bool have_best = false;
  std::exception_ptr last_failure;
  for (int r = 0; r < cfg.restarts; ++r) {
    const std::uint64_t seed_r = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    Rng rng(seed_r);
    const Eigen::VectorXd z0 = rng.uniform_ball(model.latent_dim(), radius);
    try {
      Eigen::VectorXd z_hat =
          adam_minimize(objective, z0, cfg.inner_steps, cfg.inner_lr, seed_r, keep_in_ball);
      Eigen::VectorXd x_hat = model.forward(z_hat);
      const double dist = (x_hat - y).norm();
      if (!have_best || dist < best.distance) {
        best.point = std::move(x_hat);
        best.latent = std::move(z_hat);
        best.distance = dist;
        best.restart_index = r;
        have_best = true;
      }
    } catch (const DivergedError&) {
      last_failure = std::current_exception();
    } catch (const std::domain_error&) {
      last_failure = std::current_exception();
    }
  }
  if (!have_best) {
    std::rethrow_exception(last_failure);
  }
  return best;
}

RecoveryResult pgd_1bit(const MeasurementEnsemble& A, const SignPattern& b,
                        const GenerativeModel& model, const RecoveryConfig& cfg) {
  cfg.validate();
  if (b.size() != A.rows()) {
    throw std::invalid_argument("pgd_1bit: sign pattern length does not match rows");
  }
  if (A.cols() != model.ambient_dim()) {
    throw std::invalid_argument("pgd_1bit: matrix columns do not match the model dimension");
  }

  const Eigen::VectorXd b_vec = b.to_vector();
  const int restarts = model.has_exact_projector() ? 1 : cfg.restarts;

  RecoveryResult best;
  best.final_loss = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  for (int r = 0; r < restarts; ++r) {
    const std::uint64_t seed_r = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
    trace.clear();
    bool restart_holds_best = false;
    for (int t = 0; t < cfg.outer_iters; ++t) {
      Eigen::VectorXd target =
          x + cfg.step_size * (A.entries().transpose() * (b_vec - signs_of(A.entries() * x)));
      if (target.isZero(0.0)) {
        target = A.entries().transpose() * b_vec;
        if (target.isZero(0.0)) {
          target = Eigen::VectorXd::Unit(A.cols(), A.cols() - 1);
        }
      }
      RecoveryConfig proj = cfg;
      proj.restarts = 1;
      proj.seed = derive_seed(seed_r, static_cast<std::uint64_t>(t));
      ProjectionResult pr = project_range(model, target, proj);
      x = pr.point;
      const double loss = onesided_l1(A, x, b);
      trace.push_back(loss);
      if (loss < best.final_loss) {
        best.estimate = x;
        best.latent = pr.latent;
        best.final_loss = loss;
        best.restart_index = r;
        restart_holds_best = true;
      }
    }
    if (restart_holds_best) {
      best.loss_trace = trace;
    }
  }
  best.iterations_run = cfg.outer_iters;
  return best;
}

Eigen::VectorXd biht(const MeasurementEnsemble& A, const SignPattern& b, int sparsity,
                     double step, int iters, bool normalize_each_iter) {
  if (b.size() != A.rows()) {
    throw std::invalid_argument("biht: sign pattern length does not match rows");
  }
  if (sparsity < 1 || sparsity > A.cols()) {
    throw std::invalid_argument("biht: sparsity must be in [1, n]");
  }
  if (iters < 1) throw std::invalid_argument("biht: iters must be >= 1");

  const Eigen::VectorXd b_vec = b.to_vector();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
  for (int t = 0; t < iters; ++t) {
    const Eigen::VectorXd dir = A.entries().transpose() * (b_vec - signs_of(A.entries() * x));
    x = hard_threshold(x + (step / 2.0) * dir, sparsity);
    if (normalize_each_iter) {
      const double norm = x.norm();
      if (norm > 0.0) x /= norm;
    }
  }
  if (x.isZero(0.0)) {
    x = hard_threshold(A.entries().transpose() * b_vec, sparsity);
    if (x.isZero(0.0)) {
      return Eigen::VectorXd::Unit(A.cols(), 0);
    }
  }
  return x / x.norm();
}

}  // namespace onebit
