#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace onebit {

// Decoder from a latent ball B_2^k(r) into R^n with a declared Lipschitz
// bound. Concrete models opt into extras: an exact Euclidean projector onto
// the range, or a vector-Jacobian product for gradient-based projection.
class GenerativeModel {
 public:
  virtual ~GenerativeModel() = default;

  virtual Eigen::Index latent_dim() const = 0;
  virtual Eigen::Index ambient_dim() const = 0;
  virtual double latent_radius() const = 0;

  // Upper bound L with |G(z1) - G(z2)| <= L |z1 - z2| on the latent ball.
  virtual double lipschitz_bound() const = 0;

  // True when the range lies on the unit sphere (required by the embedding
  // checks, which compare angles to Hamming distances).
  virtual bool normalized() const = 0;

  virtual Eigen::VectorXd forward(const Eigen::VectorXd& z) const = 0;

  virtual bool supports_vjp() const { return false; }
  // u |-> J_G(z)^T u. Models without gradients throw std::logic_error.
  virtual Eigen::VectorXd vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& u) const;

  virtual bool has_exact_projector() const { return false; }
  // argmin over the range of |x - y|_2. Throws std::logic_error when no
  // combinatorial projector exists for the model.
  virtual Eigen::VectorXd exact_project(const Eigen::VectorXd& y) const;

  // Short human-readable descriptor used in reports.
  virtual std::string describe() const = 0;
};

// Piecewise-linear group-sparse decoder. The latent interval
// [-r/sqrt(k), r/sqrt(k)] of each of the first k-1 coordinates is split into
// n/k sub-intervals of width W = 2 r sqrt(k) / n; within a sub-interval the
// value traces two triangles (0 -> -x_max -> 0 over the first half, then
// 0 -> +x_max -> 0 over the second), and the sub-interval index selects
// which entry of the corresponding length-(n/k) block is active. The last
// block is the constant (0, ..., 0, x_c). The output is the normalized
// concatenation, so every point of the range is a unit k-group-sparse vector
// whose last coordinate is at least x_c / sqrt((k-1) x_max^2 + x_c^2).
class GroupSparseModel final : public GenerativeModel {
 public:
  GroupSparseModel(Eigen::Index n, Eigen::Index k, double r, double x_max, double x_c);

  // Common experiment instance: x_c = 1 and x_max = sqrt(3/(k-1)), which
  // puts the last-coordinate floor at exactly 1/2 (x_max = 1 when k = 1,
  // where the model is the constant e_n).
  static GroupSparseModel with_default_amplitudes(Eigen::Index n, Eigen::Index k, double r = 1.0);

  Eigen::Index latent_dim() const override { return k_; }
  Eigen::Index ambient_dim() const override { return n_; }
  double latent_radius() const override { return r_; }
  double lipschitz_bound() const override;
  bool normalized() const override { return true; }

  Eigen::VectorXd forward(const Eigen::VectorXd& z) const override;

  // Concatenated blocks before normalization; norm is always >= x_c.
  Eigen::VectorXd raw_forward(const Eigen::VectorXd& z) const;

  bool has_exact_projector() const override { return true; }
  Eigen::VectorXd exact_project(const Eigen::VectorXd& y) const override;

  // A latent point that forward-maps (approximately, exactly when the
  // blockwise values are attainable) onto the given range member. Used to
  // report latents alongside exact projections.
  Eigen::VectorXd latent_preimage(const Eigen::VectorXd& x) const;

  // Range membership at tolerance: unit norm, at most one non-zero per
  // block, block k supported on the last coordinate only, and the
  // last-coordinate floor.
  bool in_range(const Eigen::VectorXd& x, double tol = 1e-9) const;

  // Last-coordinate floor x_c / sqrt((k-1) x_max^2 + x_c^2).
  double range_floor() const;

  Eigen::Index block_length() const { return n_ / k_; }
  double sub_interval_width() const;
  double x_max() const { return x_max_; }
  double x_c() const { return x_c_; }

  std::string describe() const override;

 private:
  Eigen::Index n_;
  Eigen::Index k_;
  double r_;
  double x_max_;
  double x_c_;
};

enum class Activation { identity, relu, sigmoid, tanh };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

struct Layer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd offsets;
  Activation activation = Activation::identity;
};

// Feed-forward decoder z -> phi_d(W_d ... phi_1(W_1 z + b_1) ... + b_d).
// All supported activations are 1-Lipschitz, so (w * W_max)^d bounds the
// Lipschitz constant, where w is the widest layer (input included) and
// W_max the largest weight magnitude.
class FeedForwardModel final : public GenerativeModel {
 public:
  FeedForwardModel(std::vector<Layer> layers, double latent_radius);

  Eigen::Index latent_dim() const override;
  Eigen::Index ambient_dim() const override;
  double latent_radius() const override { return r_; }
  double lipschitz_bound() const override;
  bool normalized() const override { return false; }

  Eigen::VectorXd forward(const Eigen::VectorXd& z) const override;

  bool supports_vjp() const override { return true; }
  // Reverse-mode product through the cached forward pass; relu uses
  // subgradient 0 at kinks.
  Eigen::VectorXd vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& u) const override;

  const std::vector<Layer>& layers() const { return layers_; }

  std::string describe() const override;

  // Weight files: a JSON manifest with "layer_sizes", "activations",
  // "latent_radius", and either inline "layers" (weights as row arrays) or a
  // "payload" path naming a binary64 file with W_1 row-major, b_1, W_2, b_2,
  // ... in order. See the README for the exact layout.
  static FeedForwardModel load(const std::filesystem::path& manifest);
  void save(const std::filesystem::path& manifest, bool inline_weights = true) const;

 private:
  std::vector<Layer> layers_;
  double r_;
};

// Unit-sphere wrapper x = G(z)/|G(z)|. Evaluation is defined only where the
// inner norm exceeds r_min; below that the latent is outside the wrapped
// model's domain and forward throws std::domain_error (distinct from the
// std::invalid_argument used for malformed inputs).
class NormalizedModel final : public GenerativeModel {
 public:
  NormalizedModel(std::shared_ptr<const GenerativeModel> inner, double r_min);

  Eigen::Index latent_dim() const override { return inner_->latent_dim(); }
  Eigen::Index ambient_dim() const override { return inner_->ambient_dim(); }
  double latent_radius() const override { return inner_->latent_radius(); }
  double lipschitz_bound() const override { return inner_->lipschitz_bound() / r_min_; }
  bool normalized() const override { return true; }

  Eigen::VectorXd forward(const Eigen::VectorXd& z) const override;

  bool supports_vjp() const override { return inner_->supports_vjp(); }
  Eigen::VectorXd vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& u) const override;

  const GenerativeModel& inner() const { return *inner_; }
  double r_min() const { return r_min_; }

  std::string describe() const override;

 private:
  std::shared_ptr<const GenerativeModel> inner_;
  double r_min_;
};

std::shared_ptr<const NormalizedModel> normalize_model(
    std::shared_ptr<const GenerativeModel> inner, double r_min);

// Lipschitz bound of a composition from the factors' bounds.
double lipschitz_compose(double l_outer, double l_inner);

}  // namespace onebit
