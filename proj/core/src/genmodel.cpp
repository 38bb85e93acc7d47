#include "onebit/genmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace onebit {

namespace {

using nlohmann::json;

double apply_activation(Activation a, double t) {
  switch (a) {
    case Activation::identity: return t;
    case Activation::relu: return t > 0.0 ? t : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-t));
    case Activation::tanh: return std::tanh(t);
  }
  throw std::logic_error("apply_activation: unreachable");
}

// Derivative in terms of the pre-activation; relu takes subgradient 0 at 0.
double activation_slope(Activation a, double t) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return t > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-t));
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double th = std::tanh(t);
      return 1.0 - th * th;
    }
  }
  throw std::logic_error("activation_slope: unreachable");
}

}  // namespace

Eigen::VectorXd GenerativeModel::vjp(const Eigen::VectorXd&, const Eigen::VectorXd&) const {
  throw std::logic_error("model does not provide gradients");
}

Eigen::VectorXd GenerativeModel::exact_project(const Eigen::VectorXd&) const {
  throw std::logic_error("model does not provide an exact projector");
}

GroupSparseModel::GroupSparseModel(Eigen::Index n, Eigen::Index k, double r, double x_max,
                                   double x_c)
    : n_(n), k_(k), r_(r), x_max_(x_max), x_c_(x_c) {
  if (k < 1) throw std::invalid_argument("GroupSparseModel: k must be >= 1");
  if (n < k || n % k != 0) {
    throw std::invalid_argument("GroupSparseModel: n must be a positive multiple of k");
  }
  if (!(r > 0.0)) throw std::invalid_argument("GroupSparseModel: r must be positive");
  if (!(x_max > 0.0)) throw std::invalid_argument("GroupSparseModel: x_max must be positive");
  if (!(x_c > 0.0)) throw std::invalid_argument("GroupSparseModel: x_c must be positive");
}

GroupSparseModel GroupSparseModel::with_default_amplitudes(Eigen::Index n, Eigen::Index k,
                                                           double r) {
  const double x_max = k >= 2 ? std::sqrt(3.0 / static_cast<double>(k - 1)) : 1.0;
  return GroupSparseModel(n, k, r, x_max, 1.0);
}

double GroupSparseModel::sub_interval_width() const {
  return 2.0 * r_ * std::sqrt(static_cast<double>(k_)) / static_cast<double>(n_);
}

double GroupSparseModel::lipschitz_bound() const {
  // Per-coordinate triangle slope is 4 x_max / W = 2 n x_max / (sqrt(k) r);
  // normalization divides by at least x_c.
  return 2.0 * static_cast<double>(n_) * x_max_ /
         (std::sqrt(static_cast<double>(k_)) * r_ * x_c_);
}

double GroupSparseModel::range_floor() const {
  return x_c_ / std::sqrt(static_cast<double>(k_ - 1) * x_max_ * x_max_ + x_c_ * x_c_);
}

Eigen::VectorXd GroupSparseModel::raw_forward(const Eigen::VectorXd& z) const {
  if (z.size() != k_) throw std::invalid_argument("GroupSparseModel: latent length mismatch");
  if (z.norm() > r_ * (1.0 + 1e-12)) {
    throw std::invalid_argument("GroupSparseModel: latent outside the radius-r ball");
  }
  const Eigen::Index blk = block_length();
  const double w = sub_interval_width();
  const double half = r_ / std::sqrt(static_cast<double>(k_));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  for (Eigen::Index i = 0; i + 1 < k_; ++i) {
    const double zi = z[i];
    if (zi < -half || zi > half) continue;  // block stays zero
    const double t = zi + half;
    Eigen::Index j = static_cast<Eigen::Index>(std::floor(t / w));
    if (j >= blk) j = blk - 1;  // right endpoint belongs to the last sub-interval
    const double u = t - static_cast<double>(j) * w;
    const double q = w / 4.0;  // quarter width; triangle apexes sit at q and 3q
    double v;
    if (u < q) {
      v = -x_max_ * (u / q);
    } else if (u < 2.0 * q) {
      v = -x_max_ * (2.0 - u / q);
    } else if (u < 3.0 * q) {
      v = x_max_ * (u / q - 2.0);
    } else {
      v = x_max_ * (4.0 - u / q);
    }
    out[i * blk + j] = v;
  }
  out[n_ - 1] = x_c_;
  return out;
}

Eigen::VectorXd GroupSparseModel::forward(const Eigen::VectorXd& z) const {
  Eigen::VectorXd raw = raw_forward(z);
  return raw / raw.norm();
}

Eigen::VectorXd GroupSparseModel::exact_project(const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw std::invalid_argument("exact_project: length mismatch");
  if (y.isZero(0.0)) throw std::invalid_argument("exact_project: zero vector has no nearest range point");

  // Minimizing |x - y| over unit-norm range members is maximizing <x, y>.
  // Per block the best support is the entry of largest magnitude; the raw
  // amplitudes v_i then maximize (<q, v> + x_c d)/|(v, x_c)| over the box
  // 0 <= v_i <= x_max, with q the picked magnitudes and d = y_n. KKT gives
  // v_i = min(lambda q_i, x_max) with a shared lambda, and on a fixed clamp
  // pattern stationarity is linear in lambda, so scanning the k-1 prefix
  // patterns of the blocks sorted by q (plus the all-clamped corner) and
  // scoring each candidate directly is exact.
  const Eigen::Index blk = block_length();

  std::vector<Eigen::Index> support(static_cast<std::size_t>(k_ > 0 ? k_ - 1 : 0), 0);
  Eigen::VectorXd picked = Eigen::VectorXd::Zero(k_ > 1 ? k_ - 1 : 0);
  for (Eigen::Index i = 0; i + 1 < k_; ++i) {
    Eigen::Index best = 0;
    double best_mag = std::abs(y[i * blk]);
    for (Eigen::Index j = 1; j < blk; ++j) {
      const double mag = std::abs(y[i * blk + j]);
      if (mag > best_mag) {  // strict: ties keep the lowest index
        best = j;
        best_mag = mag;
      }
    }
    support[static_cast<std::size_t>(i)] = best;
    picked[i] = y[i * blk + best];
  }

  const double d = y[n_ - 1];
  const Eigen::Index nb = picked.size();
  Eigen::VectorXd q = picked.cwiseAbs();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(nb));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return q[a] > q[b]; });

  const auto score = [&](const Eigen::VectorXd& v) {
    const double norm = std::sqrt(v.squaredNorm() + x_c_ * x_c_);
    return (q.dot(v) + x_c_ * d) / norm;
  };
  const auto candidate = [&](Eigen::Index clamped) {
    // Top `clamped` blocks sit at x_max; the rest share v_i = lambda q_i.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(nb);
    double q_top = 0.0;
    for (Eigen::Index r = 0; r < clamped; ++r) q_top += q[order[static_cast<std::size_t>(r)]];
    const double denom = x_max_ * q_top + x_c_ * d;
    double lambda = 0.0;
    if (clamped < nb) {
      if (denom <= 0.0) return std::pair<bool, Eigen::VectorXd>{false, v};
      lambda = (x_max_ * x_max_ * static_cast<double>(clamped) + x_c_ * x_c_) / denom;
    }
    for (Eigen::Index r = 0; r < nb; ++r) {
      const Eigen::Index i = order[static_cast<std::size_t>(r)];
      v[i] = r < clamped ? x_max_ : std::min(lambda * q[i], x_max_);
    }
    return std::pair<bool, Eigen::VectorXd>{true, v};
  };

  Eigen::VectorXd best_v = Eigen::VectorXd::Zero(nb);
  double best_score = score(best_v);
  for (Eigen::Index clamped = 0; clamped <= nb; ++clamped) {
    const auto [ok, v] = candidate(clamped);
    if (!ok) continue;
    const double s = score(v);
    if (s > best_score) {
      best_score = s;
      best_v = v;
    }
  }

  const double norm = std::sqrt(best_v.squaredNorm() + x_c_ * x_c_);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
  for (Eigen::Index i = 0; i < nb; ++i) {
    const double sign = picked[i] < 0.0 ? -1.0 : 1.0;
    x[i * blk + support[static_cast<std::size_t>(i)]] = sign * best_v[i] / norm;
  }
  x[n_ - 1] = x_c_ / norm;
  return x;
}

Eigen::VectorXd GroupSparseModel::latent_preimage(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw std::invalid_argument("latent_preimage: length mismatch");
  const Eigen::Index blk = block_length();
  const double w = sub_interval_width();
  const double half = r_ / std::sqrt(static_cast<double>(k_));
  const double xn = x[n_ - 1];
  const double ratio = xn > 0.0 ? x_c_ / xn : 0.0;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(k_);
  for (Eigen::Index i = 0; i + 1 < k_; ++i) {
    Eigen::Index j = 0;
    double val = 0.0;
    for (Eigen::Index jj = 0; jj < blk; ++jj) {
      const double e = x[i * blk + jj];
      if (std::abs(e) > std::abs(val)) {
        val = e;
        j = jj;
      }
    }
    // Raw block value that normalization would scale back to x's entry,
    // clamped into the attainable amplitude range.
    double v = std::clamp(val * ratio, -x_max_, x_max_);
    const double q = w / 4.0;
    double u;
    if (v == 0.0) {
      u = 0.0;
    } else if (v < 0.0) {
      u = q * (-v / x_max_);  // falling edge of the first triangle
    } else {
      u = 2.0 * q + q * (v / x_max_);  // rising edge of the second triangle
    }
    z[i] = -half + static_cast<double>(j) * w + u;
  }
  return z;
}

bool GroupSparseModel::in_range(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != n_) return false;
  if (std::abs(x.norm() - 1.0) > tol) return false;
  const Eigen::Index blk = block_length();
  const double cap = x_max_ * x[n_ - 1] / x_c_;  // raw amplitudes stay within x_max
  for (Eigen::Index i = 0; i + 1 < k_; ++i) {
    int nonzeros = 0;
    for (Eigen::Index j = 0; j < blk; ++j) {
      const double mag = std::abs(x[i * blk + j]);
      if (mag > tol) ++nonzeros;
      if (mag > cap + tol) return false;
    }
    if (nonzeros > 1) return false;
  }
  for (Eigen::Index j = (k_ - 1) * blk; j + 1 < n_; ++j) {
    if (std::abs(x[j]) > tol) return false;
  }
  return x[n_ - 1] >= range_floor() - tol;
}

std::string GroupSparseModel::describe() const {
  std::ostringstream os;
  os << "group-sparse(n=" << n_ << ",k=" << k_ << ",r=" << r_ << ",x_max=" << x_max_
     << ",x_c=" << x_c_ << ")";
  return os.str();
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  throw std::logic_error("activation_name: unreachable");
}

FeedForwardModel::FeedForwardModel(std::vector<Layer> layers, double latent_radius)
    : layers_(std::move(layers)), r_(latent_radius) {
  if (layers_.empty()) throw std::invalid_argument("FeedForwardModel: needs at least one layer");
  if (!(r_ > 0.0)) throw std::invalid_argument("FeedForwardModel: latent radius must be positive");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.weights.rows() < 1 || l.weights.cols() < 1) {
      throw std::invalid_argument("FeedForwardModel: empty weight matrix");
    }
    if (l.offsets.size() != l.weights.rows()) {
      throw std::invalid_argument("FeedForwardModel: offset length mismatch");
    }
    if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows()) {
      throw std::invalid_argument("FeedForwardModel: layer dimensions do not chain");
    }
  }
}

Eigen::Index FeedForwardModel::latent_dim() const { return layers_.front().weights.cols(); }

Eigen::Index FeedForwardModel::ambient_dim() const { return layers_.back().weights.rows(); }

double FeedForwardModel::lipschitz_bound() const {
  double width = static_cast<double>(latent_dim());
  double w_max = 0.0;
  for (const Layer& l : layers_) {
    width = std::max(width, static_cast<double>(l.weights.rows()));
    w_max = std::max(w_max, l.weights.cwiseAbs().maxCoeff());
  }
  return std::pow(width * w_max, static_cast<double>(layers_.size()));
}

Eigen::VectorXd FeedForwardModel::forward(const Eigen::VectorXd& z) const {
  if (z.size() != latent_dim()) {
    throw std::invalid_argument("FeedForwardModel: latent length mismatch");
  }
  Eigen::VectorXd v = z;
  for (const Layer& l : layers_) {
    Eigen::VectorXd pre = l.weights * v + l.offsets;
    for (Eigen::Index i = 0; i < pre.size(); ++i) pre[i] = apply_activation(l.activation, pre[i]);
    v = std::move(pre);
  }
  return v;
}

Eigen::VectorXd FeedForwardModel::vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& u) const {
  if (z.size() != latent_dim()) {
    throw std::invalid_argument("FeedForwardModel: latent length mismatch");
  }
  if (u.size() != ambient_dim()) {
    throw std::invalid_argument("FeedForwardModel: cotangent length mismatch");
  }
  std::vector<Eigen::VectorXd> pre_acts;
  pre_acts.reserve(layers_.size());
  Eigen::VectorXd v = z;
  for (const Layer& l : layers_) {
    Eigen::VectorXd pre = l.weights * v + l.offsets;
    pre_acts.push_back(pre);
    for (Eigen::Index i = 0; i < pre.size(); ++i) pre[i] = apply_activation(l.activation, pre[i]);
    v = std::move(pre);
  }
  Eigen::VectorXd g = u;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    const Eigen::VectorXd& pre = pre_acts[li];
    Eigen::VectorXd scaled(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      scaled[i] = g[i] * activation_slope(l.activation, pre[i]);
    }
    g = l.weights.transpose() * scaled;
  }
  return g;
}

std::string FeedForwardModel::describe() const {
  std::ostringstream os;
  os << "ffnet(k=" << latent_dim() << ",n=" << ambient_dim() << ",depth=" << layers_.size()
     << ")";
  return os.str();
}

FeedForwardModel FeedForwardModel::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("weight manifest: cannot open " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("weight manifest: " + manifest.string() + ": " + e.what());
  }
  if (!doc.contains("layer_sizes") || !doc.contains("activations") ||
      !doc.contains("latent_radius")) {
    throw std::runtime_error("weight manifest: missing layer_sizes/activations/latent_radius");
  }
  const std::vector<Eigen::Index> sizes = doc["layer_sizes"].get<std::vector<Eigen::Index>>();
  const std::vector<std::string> acts = doc["activations"].get<std::vector<std::string>>();
  if (sizes.size() < 2 || acts.size() != sizes.size() - 1) {
    throw std::runtime_error("weight manifest: layer_sizes/activations lengths inconsistent");
  }
  const double radius = doc["latent_radius"].get<double>();
  const std::size_t depth = acts.size();

  std::vector<Layer> layers(depth);
  for (std::size_t i = 0; i < depth; ++i) {
    layers[i].activation = activation_from_name(acts[i]);
    layers[i].weights.resize(sizes[i + 1], sizes[i]);
    layers[i].offsets.resize(sizes[i + 1]);
  }

  if (doc.contains("layers")) {
    const json& jl = doc["layers"];
    if (!jl.is_array() || jl.size() != depth) {
      throw std::runtime_error("weight manifest: layers array length mismatch");
    }
    for (std::size_t i = 0; i < depth; ++i) {
      const auto rows = jl[i]["weights"].get<std::vector<std::vector<double>>>();
      const auto offs = jl[i]["offsets"].get<std::vector<double>>();
      if (rows.size() != static_cast<std::size_t>(sizes[i + 1]) ||
          offs.size() != static_cast<std::size_t>(sizes[i + 1])) {
        throw std::runtime_error("weight manifest: layer " + std::to_string(i) + " shape mismatch");
      }
      for (std::size_t rr = 0; rr < rows.size(); ++rr) {
        if (rows[rr].size() != static_cast<std::size_t>(sizes[i])) {
          throw std::runtime_error("weight manifest: layer " + std::to_string(i) +
                                   " row length mismatch");
        }
        for (std::size_t cc = 0; cc < rows[rr].size(); ++cc) {
          layers[i].weights(static_cast<Eigen::Index>(rr), static_cast<Eigen::Index>(cc)) =
              rows[rr][cc];
        }
      }
      for (std::size_t rr = 0; rr < offs.size(); ++rr) {
        layers[i].offsets[static_cast<Eigen::Index>(rr)] = offs[rr];
      }
    }
  } else if (doc.contains("payload")) {
    const std::filesystem::path payload =
        manifest.parent_path() / doc["payload"].get<std::string>();
    std::ifstream bin(payload, std::ios::binary);
    if (!bin) throw std::runtime_error("weight payload: cannot open " + payload.string());
    auto read_doubles = [&](double* dst, std::streamsize count) {
      bin.read(reinterpret_cast<char*>(dst), count * static_cast<std::streamsize>(sizeof(double)));
      if (!bin) throw std::runtime_error("weight payload: truncated " + payload.string());
    };
    for (std::size_t i = 0; i < depth; ++i) {
      // Row-major on disk; Eigen matrices are column-major, so stage per row.
      std::vector<double> row(static_cast<std::size_t>(sizes[i]));
      for (Eigen::Index rr = 0; rr < sizes[i + 1]; ++rr) {
        read_doubles(row.data(), sizes[i]);
        for (Eigen::Index cc = 0; cc < sizes[i]; ++cc) {
          layers[i].weights(rr, cc) = row[static_cast<std::size_t>(cc)];
        }
      }
      read_doubles(layers[i].offsets.data(), sizes[i + 1]);
    }
    if (bin.peek() != std::char_traits<char>::eof()) {
      throw std::runtime_error("weight payload: trailing bytes in " + payload.string());
    }
  } else {
    throw std::runtime_error("weight manifest: needs either inline layers or a payload path");
  }
  return FeedForwardModel(std::move(layers), radius);
}

void FeedForwardModel::save(const std::filesystem::path& manifest, bool inline_weights) const {
  json doc;
  std::vector<Eigen::Index> sizes;
  sizes.push_back(latent_dim());
  std::vector<std::string> acts;
  for (const Layer& l : layers_) {
    sizes.push_back(l.weights.rows());
    acts.push_back(activation_name(l.activation));
  }
  doc["layer_sizes"] = sizes;
  doc["activations"] = acts;
  doc["latent_radius"] = r_;

  if (inline_weights) {
    json jl = json::array();
    for (const Layer& l : layers_) {
      json entry;
      std::vector<std::vector<double>> rows(static_cast<std::size_t>(l.weights.rows()));
      for (Eigen::Index rr = 0; rr < l.weights.rows(); ++rr) {
        rows[static_cast<std::size_t>(rr)].assign(l.weights.cols(), 0.0);
        for (Eigen::Index cc = 0; cc < l.weights.cols(); ++cc) {
          rows[static_cast<std::size_t>(rr)][static_cast<std::size_t>(cc)] = l.weights(rr, cc);
        }
      }
      entry["weights"] = rows;
      entry["offsets"] = std::vector<double>(l.offsets.data(), l.offsets.data() + l.offsets.size());
      jl.push_back(std::move(entry));
    }
    doc["layers"] = std::move(jl);
  } else {
    const std::filesystem::path payload = manifest.string() + ".bin";
    std::ofstream bin(payload, std::ios::binary);
    if (!bin) throw std::runtime_error("weight payload: cannot open " + payload.string());
    for (const Layer& l : layers_) {
      for (Eigen::Index rr = 0; rr < l.weights.rows(); ++rr) {
        for (Eigen::Index cc = 0; cc < l.weights.cols(); ++cc) {
          const double v = l.weights(rr, cc);
          bin.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
      }
      bin.write(reinterpret_cast<const char*>(l.offsets.data()),
                static_cast<std::streamsize>(sizeof(double)) * l.offsets.size());
    }
    if (!bin) throw std::runtime_error("weight payload: write failed for " + payload.string());
    doc["payload"] = payload.filename().string();
  }

  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("weight manifest: cannot open " + manifest.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("weight manifest: write failed for " + manifest.string());
}

NormalizedModel::NormalizedModel(std::shared_ptr<const GenerativeModel> inner, double r_min)
    : inner_(std::move(inner)), r_min_(r_min) {
  if (!inner_) throw std::invalid_argument("NormalizedModel: inner model is null");
  if (!(r_min_ > 0.0)) throw std::invalid_argument("NormalizedModel: r_min must be positive");
}

Eigen::VectorXd NormalizedModel::forward(const Eigen::VectorXd& z) const {
  Eigen::VectorXd raw = inner_->forward(z);
  const double norm = raw.norm();
  if (!(norm > r_min_)) {
    throw std::domain_error("NormalizedModel: inner output norm " + std::to_string(norm) +
                            " is not above the floor " + std::to_string(r_min_));
  }
  return raw / norm;
}

Eigen::VectorXd NormalizedModel::vjp(const Eigen::VectorXd& z, const Eigen::VectorXd& u) const {
  Eigen::VectorXd raw = inner_->forward(z);
  const double norm = raw.norm();
  if (!(norm > r_min_)) {
    throw std::domain_error("NormalizedModel: inner output norm " + std::to_string(norm) +
                            " is not above the floor " + std::to_string(r_min_));
  }
  const Eigen::VectorXd h = raw / norm;
  const Eigen::VectorXd tangent = (u - h * h.dot(u)) / norm;
  return inner_->vjp(z, tangent);
}

std::string NormalizedModel::describe() const {
  std::ostringstream os;
  os << "normalized(" << inner_->describe() << ",r_min=" << r_min_ << ")";
  return os.str();
}

std::shared_ptr<const NormalizedModel> normalize_model(
    std::shared_ptr<const GenerativeModel> inner, double r_min) {
  return std::make_shared<const NormalizedModel>(std::move(inner), r_min);
}

double lipschitz_compose(double l_outer, double l_inner) {
  if (!(l_outer >= 0.0) || !(l_inner >= 0.0)) {
    throw std::invalid_argument("lipschitz_compose: bounds must be non-negative");
  }
  return l_outer * l_inner;
}

}  // namespace onebit
