#include "onebit/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "onebit/errors.hpp"
#include "onebit/lasso.hpp"
#include "onebit/rng.hpp"

namespace onebit {

namespace {

constexpr std::uint64_t kTagMatrix = 1;
constexpr std::uint64_t kTagLatent = 2;
constexpr std::uint64_t kTagNoise = 3;
constexpr std::uint64_t kTagSolver = 4;

constexpr const char* kCsvHeader =
    "row,m,solver,trial,d_s,l2_per_coord,final_loss,tau1,tau2,status,"
    "d_s_std,d_s_errbar,l2_std,l2_errbar";

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last) {
    throw std::runtime_error(context + ": cannot parse number '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& context) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::runtime_error(context + ": cannot parse integer '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

bool csv_safe(const std::string& s) {
  return !s.empty() && s.find_first_of(",\"\n\r") == std::string::npos;
}

bool same_value(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

std::uint64_t seed_for(std::uint64_t master, std::uint64_t tag, std::uint64_t a) {
  return derive_seed(derive_seed(master, tag), a);
}

std::uint64_t seed_for(std::uint64_t master, std::uint64_t tag, std::uint64_t a,
                       std::uint64_t b) {
  return derive_seed(seed_for(master, tag, a), b);
}

std::uint64_t seed_for(std::uint64_t master, std::uint64_t tag, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  return derive_seed(seed_for(master, tag, a, b), c);
}

// Uniform getters for config tables; `where` prefixes error messages.
long long table_int(const ConfigTable& t, const std::string& key, long long fallback,
                    const std::string& where) {
  const auto it = t.find(key);
  return it == t.end() ? fallback : it->second.as_integer(where + "." + key);
}

double table_real(const ConfigTable& t, const std::string& key, double fallback,
                  const std::string& where) {
  const auto it = t.find(key);
  return it == t.end() ? fallback : it->second.as_real(where + "." + key);
}

std::string table_string(const ConfigTable& t, const std::string& key, std::string fallback,
                         const std::string& where) {
  const auto it = t.find(key);
  return it == t.end() ? std::move(fallback) : it->second.as_string(where + "." + key);
}

std::uint64_t to_seed(long long v, const std::string& where) {
  if (v < 0) throw ConfigError(where + ": seeds must be >= 0");
  return static_cast<std::uint64_t>(v);
}

// Draw a planted latent and its (non-degenerate) image, retrying draws that
// land outside a normalized model's domain.
std::pair<Eigen::VectorXd, Eigen::VectorXd> plant_signal(const GenerativeModel& model,
                                                         const std::string& sampling,
                                                         std::uint64_t seed) {
  const Eigen::Index k = model.latent_dim();
  const double r = model.latent_radius();
  Rng rng(seed);
  for (int attempt = 0; attempt < 256; ++attempt) {
    Eigen::VectorXd z;
    if (sampling == "blocks") {
      const double half = r / std::sqrt(static_cast<double>(k));
      z.resize(k);
      for (Eigen::Index i = 0; i < k; ++i) z[i] = (2.0 * rng.uniform() - 1.0) * half;
    } else {
      z = rng.uniform_ball(k, r);
    }
    try {
      Eigen::VectorXd x = model.forward(z);
      if (x.norm() > 0.0 && x.allFinite()) return {std::move(z), std::move(x)};
    } catch (const std::domain_error&) {
      // outside the normalized model's domain; redraw
    }
  }
  throw ConfigError("plant_signal: could not draw a latent inside the model domain");
}

void canonical_sort(SweepResult& result) {
  std::vector<std::size_t> order(result.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const SweepRow& ra = result.rows[a];
    const SweepRow& rb = result.rows[b];
    if (ra.m != rb.m) return ra.m < rb.m;
    if (ra.solver != rb.solver) return ra.solver < rb.solver;
    return ra.trial < rb.trial;
  });
  std::vector<SweepRow> rows;
  std::vector<double> walls;
  rows.reserve(order.size());
  walls.reserve(order.size());
  const bool have_walls = result.wall_seconds.size() == result.rows.size();
  for (std::size_t i : order) {
    rows.push_back(std::move(result.rows[i]));
    if (have_walls) walls.push_back(result.wall_seconds[i]);
  }
  result.rows = std::move(rows);
  result.wall_seconds = std::move(walls);
}

}  // namespace

std::shared_ptr<const GenerativeModel> ModelSpec::make_model() const {
  if (kind == "group-sparse") {
    const double amp = x_max > 0.0
                           ? x_max
                           : (k >= 2 ? std::sqrt(3.0 / static_cast<double>(k - 1)) : 1.0);
    return std::make_shared<const GroupSparseModel>(n, k, r, amp, x_c);
  }
  if (kind.rfind("ffnet:", 0) == 0) {
    const std::string path = kind.substr(6);
    std::shared_ptr<const GenerativeModel> net;
    try {
      net = std::make_shared<const FeedForwardModel>(FeedForwardModel::load(path));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("model load failure: ") + e.what());
    }
    if (n > 0 && n != net->ambient_dim()) {
      throw ConfigError("model.n does not match the loaded network output size");
    }
    if (k > 0 && k != net->latent_dim()) {
      throw ConfigError("model.k does not match the loaded network input size");
    }
    if (r_min > 0.0) return normalize_model(net, r_min);
    return net;
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  const ConfigDoc doc = ConfigDoc::parse_file(path);
  return from_doc(doc, path.has_parent_path() ? path.parent_path() : ".");
}

ExperimentConfig ExperimentConfig::from_doc(const ConfigDoc& doc,
                                            const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  const ConfigTable& root = doc.root();
  reject_unknown_keys(root, {"out", "master_seed", "trials", "m_grid", "sampling", "latent_seeds"},
                      "config");
  for (const auto& [name, table] : doc.tables()) {
    if (name != "model" && name != "noise") throw ConfigError("unknown section [" + name + "]");
  }
  for (const auto& [name, tables] : doc.table_arrays()) {
    if (name != "solvers") throw ConfigError("unknown section [[" + name + "]]");
  }

  cfg.out_path = table_string(root, "out", cfg.out_path, "config");
  cfg.master_seed = to_seed(table_int(root, "master_seed", 0, "config"), "config.master_seed");
  cfg.trials = static_cast<int>(table_int(root, "trials", 1, "config"));
  cfg.sampling = table_string(root, "sampling", cfg.sampling, "config");
  if (const auto it = root.find("m_grid"); it != root.end()) {
    for (const ConfigValue& v : it->second.as_array("config.m_grid")) {
      cfg.m_grid.push_back(static_cast<Eigen::Index>(v.as_integer("config.m_grid[]")));
    }
  }
  if (const auto it = root.find("latent_seeds"); it != root.end()) {
    for (const ConfigValue& v : it->second.as_array("config.latent_seeds")) {
      cfg.latent_seeds.push_back(
          to_seed(v.as_integer("config.latent_seeds[]"), "config.latent_seeds"));
    }
  }

  const ConfigTable& model = doc.table("model");
  reject_unknown_keys(model, {"kind", "n", "k", "r", "x_max", "x_c", "r_min"}, "model");
  cfg.model.kind = table_string(model, "kind", cfg.model.kind, "model");
  cfg.model.n = static_cast<Eigen::Index>(table_int(model, "n", 0, "model"));
  cfg.model.k = static_cast<Eigen::Index>(table_int(model, "k", 0, "model"));
  cfg.model.r = table_real(model, "r", 1.0, "model");
  cfg.model.x_max = table_real(model, "x_max", 0.0, "model");
  cfg.model.x_c = table_real(model, "x_c", 1.0, "model");
  cfg.model.r_min = table_real(model, "r_min", 0.0, "model");
  if (cfg.model.kind.rfind("ffnet:", 0) == 0) {
    const std::filesystem::path rel = cfg.model.kind.substr(6);
    if (rel.is_relative()) {
      cfg.model.kind = "ffnet:" + (base_dir / rel).string();
    }
  }

  if (doc.has_table("noise")) {
    const ConfigTable& noise = doc.table("noise");
    reject_unknown_keys(noise, {"kind", "sigma", "flip_prob"}, "noise");
    const std::string kind = table_string(noise, "kind", "none", "noise");
    if (kind == "none") {
      cfg.noise.kind = NoiseSpec::Kind::none;
    } else if (kind == "gaussian") {
      cfg.noise.kind = NoiseSpec::Kind::gaussian;
    } else if (kind == "sign_flip") {
      cfg.noise.kind = NoiseSpec::Kind::sign_flip;
    } else {
      throw ConfigError("noise.kind must be none, gaussian, or sign_flip");
    }
    cfg.noise.sigma = table_real(noise, "sigma", 0.0, "noise");
    cfg.noise.flip_prob = table_real(noise, "flip_prob", 0.0, "noise");
  }

  for (const ConfigTable& st : doc.table_array("solvers")) {
    SolverSpec spec;
    spec.name = table_string(st, "name", "", "solvers");
    spec.label = table_string(st, "label", spec.name, "solvers");
    const std::string where = "solvers(" + spec.name + ")";
    if (spec.name == "pgd1bit") {
      reject_unknown_keys(
          st, {"name", "label", "step_size", "outer_iters", "restarts", "inner_steps", "inner_lr"},
          where);
      spec.recovery.step_size = table_real(st, "step_size", spec.recovery.step_size, where);
      spec.recovery.outer_iters =
          static_cast<int>(table_int(st, "outer_iters", spec.recovery.outer_iters, where));
      spec.recovery.restarts =
          static_cast<int>(table_int(st, "restarts", spec.recovery.restarts, where));
      spec.recovery.inner_steps =
          static_cast<int>(table_int(st, "inner_steps", spec.recovery.inner_steps, where));
      spec.recovery.inner_lr = table_real(st, "inner_lr", spec.recovery.inner_lr, where);
    } else if (spec.name == "biht") {
      reject_unknown_keys(st, {"name", "label", "sparsity", "step_size", "iters"}, where);
      spec.sparsity = static_cast<int>(table_int(st, "sparsity", spec.sparsity, where));
      spec.biht_step = table_real(st, "step_size", spec.biht_step, where);
      spec.biht_iters = static_cast<int>(table_int(st, "iters", spec.biht_iters, where));
    } else if (spec.name == "lasso") {
      reject_unknown_keys(st, {"name", "label", "reg"}, where);
      spec.reg = table_real(st, "reg", spec.reg, where);
    } else if (spec.name == "lasso1bit") {
      reject_unknown_keys(st, {"name", "label"}, where);
    } else {
      throw ConfigError("unknown solver '" + spec.name + "'");
    }
    cfg.solvers.push_back(std::move(spec));
  }

  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (m_grid.empty()) throw ConfigError("m_grid must be non-empty");
  for (Eigen::Index m : m_grid) {
    if (m < 1) throw ConfigError("m_grid entries must be >= 1");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (solvers.empty()) throw ConfigError("at least one [[solvers]] entry is required");
  if (sampling != "ball" && sampling != "blocks") {
    throw ConfigError("sampling must be 'ball' or 'blocks'");
  }
  if (out_path.empty()) throw ConfigError("out path must be non-empty");
  if (!(noise.sigma >= 0.0)) throw ConfigError("noise.sigma must be >= 0");
  if (!(noise.flip_prob >= 0.0 && noise.flip_prob <= 1.0)) {
    throw ConfigError("noise.flip_prob must be in [0, 1]");
  }
  if (model.kind == "group-sparse") {
    if (model.n < 1 || model.k < 1) throw ConfigError("group-sparse model needs n and k");
    if (model.r_min > 0.0) throw ConfigError("r_min applies only to ffnet models");
  } else if (model.kind.rfind("ffnet:", 0) != 0) {
    throw ConfigError("unknown model kind '" + model.kind + "'");
  }
  std::vector<std::string> labels;
  for (const SolverSpec& s : solvers) {
    if (!csv_safe(s.label)) {
      throw ConfigError("solver label '" + s.label + "' is empty or not CSV-safe");
    }
    if (std::find(labels.begin(), labels.end(), s.label) != labels.end()) {
      throw ConfigError("duplicate solver label '" + s.label + "'");
    }
    labels.push_back(s.label);
    if (s.name == "pgd1bit") {
      try {
        s.recovery.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (s.name == "biht") {
      if (s.sparsity < 1) throw ConfigError("biht sparsity must be >= 1");
      if (s.biht_iters < 1) throw ConfigError("biht iters must be >= 1");
      if (!(s.biht_step > 0.0)) throw ConfigError("biht step_size must be > 0");
    } else if (s.name == "lasso") {
      if (s.reg < 0.0) throw ConfigError("lasso reg must be >= 0");
    } else if (s.name != "lasso1bit") {
      throw ConfigError("unknown solver '" + s.name + "'");
    }
  }
}

std::vector<SweepAggregate> compute_aggregates(const std::vector<SweepRow>& rows) {
  std::vector<SweepAggregate> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].m == rows[i].m && rows[j].solver == rows[i].solver) ++j;

    SweepAggregate agg;
    agg.m = rows[i].m;
    agg.solver = rows[i].solver;
    std::vector<const SweepRow*> kept;
    for (std::size_t t = i; t < j; ++t) {
      if (rows[t].status != "diverged") kept.push_back(&rows[t]);
    }
    agg.count = static_cast<int>(kept.size());
    if (kept.empty()) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      agg.d_s_mean = agg.d_s_std = agg.d_s_errbar = nan;
      agg.l2_mean = agg.l2_std = agg.l2_errbar = nan;
      agg.final_loss_mean = agg.tau1_mean = agg.tau2_mean = nan;
    } else {
      const double n = static_cast<double>(kept.size());
      for (const SweepRow* r : kept) {
        agg.d_s_mean += r->d_s;
        agg.l2_mean += r->l2_per_coord;
        agg.final_loss_mean += r->final_loss;
        agg.tau1_mean += r->tau1;
        agg.tau2_mean += r->tau2;
      }
      agg.d_s_mean /= n;
      agg.l2_mean /= n;
      agg.final_loss_mean /= n;
      agg.tau1_mean /= n;
      agg.tau2_mean /= n;
      if (kept.size() > 1) {
        double ds_sq = 0.0;
        double l2_sq = 0.0;
        for (const SweepRow* r : kept) {
          ds_sq += (r->d_s - agg.d_s_mean) * (r->d_s - agg.d_s_mean);
          l2_sq += (r->l2_per_coord - agg.l2_mean) * (r->l2_per_coord - agg.l2_mean);
        }
        agg.d_s_std = std::sqrt(ds_sq / (n - 1.0));
        agg.l2_std = std::sqrt(l2_sq / (n - 1.0));
      }
      agg.d_s_errbar = 0.5 * agg.d_s_std;
      agg.l2_errbar = 0.5 * agg.l2_std;
    }
    out.push_back(std::move(agg));
    i = j;
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const std::shared_ptr<const GenerativeModel> model = config.model.make_model();
  const Eigen::Index n = model->ambient_dim();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Signals are planted per trial and reused across the whole m grid.
  std::vector<Eigen::VectorXd> directions;
  directions.reserve(static_cast<std::size_t>(config.trials));
  for (int t = 0; t < config.trials; ++t) {
    const std::uint64_t latent_seed =
        config.latent_seeds.empty()
            ? seed_for(config.master_seed, kTagLatent, static_cast<std::uint64_t>(t))
            : config.latent_seeds[static_cast<std::size_t>(t) % config.latent_seeds.size()];
    directions.push_back(plant_signal(*model, config.sampling, latent_seed).second.normalized());
  }

  SweepResult result;
  result.model_id = model->describe();
  result.master_seed = config.master_seed;

  for (const Eigen::Index m : config.m_grid) {
    for (int t = 0; t < config.trials; ++t) {
      const Eigen::VectorXd& x_dir = directions[static_cast<std::size_t>(t)];
      const MeasurementEnsemble A = gaussian_matrix(
          m, n,
          seed_for(config.master_seed, kTagMatrix, static_cast<std::uint64_t>(m),
                   static_cast<std::uint64_t>(t)));
      const SignPattern clean = sign_measure(A, x_dir);
      NoiseSpec noise = config.noise;
      noise.seed = seed_for(config.master_seed, kTagNoise, static_cast<std::uint64_t>(m),
                            static_cast<std::uint64_t>(t));
      const SignPattern b = noisy_sign_measure(A, x_dir, noise);
      const double tau1 = hamming_dist(clean, b);

      for (std::size_t si = 0; si < config.solvers.size(); ++si) {
        const SolverSpec& spec = config.solvers[si];
        SweepRow row;
        row.m = m;
        row.solver = spec.label;
        row.trial = t;
        row.tau1 = tau1;

        const auto start = std::chrono::steady_clock::now();
        try {
          Eigen::VectorXd x_hat;
          if (spec.name == "pgd1bit") {
            RecoveryConfig rc = spec.recovery;
            rc.seed = seed_for(config.master_seed, kTagSolver, static_cast<std::uint64_t>(m),
                               static_cast<std::uint64_t>(t), si);
            x_hat = pgd_1bit(A, b, *model, rc).estimate;
          } else if (spec.name == "biht") {
            x_hat = biht(A, b, spec.sparsity, spec.biht_step, spec.biht_iters);
          } else if (spec.name == "lasso") {
            Eigen::VectorXd y = A.entries() * x_dir;
            if (config.noise.kind == NoiseSpec::Kind::gaussian) {
              Rng lin_rng(derive_seed(noise.seed, 1));
              y += config.noise.sigma * lin_rng.gaussian_vector(m);
            }
            x_hat = lasso_linear(A, y, spec.reg);
          } else {  // lasso1bit
            try {
              x_hat = lasso_1bit(A, b);
            } catch (const InfeasibleError&) {
              x_hat = lasso_1bit_relaxed(A, b);
              row.status = "relaxed";
            }
          }

          const double norm = x_hat.norm();
          if (!x_hat.allFinite() || !(norm > 0.0)) {
            row.status = "diverged";
            row.d_s = row.l2_per_coord = row.final_loss = row.tau2 = nan;
          } else {
            const Eigen::VectorXd x_hat_dir = x_hat / norm;
            row.d_s = geodesic_dist(x_dir, x_hat_dir);
            row.l2_per_coord = (x_dir - x_hat_dir).norm() / static_cast<double>(n);
            row.final_loss = onesided_l1(A, x_hat_dir, b);
            row.tau2 = hamming_dist(sign_measure(A, x_hat_dir), b);
          }
        } catch (const DivergedError&) {
          row.status = "diverged";
          row.d_s = row.l2_per_coord = row.final_loss = row.tau2 = nan;
        } catch (const std::domain_error&) {
          row.status = "diverged";
          row.d_s = row.l2_per_coord = row.final_loss = row.tau2 = nan;
        }
        const auto stop = std::chrono::steady_clock::now();
        result.rows.push_back(std::move(row));
        result.wall_seconds.push_back(std::chrono::duration<double>(stop - start).count());
      }
    }
  }

  canonical_sort(result);
  result.aggregates = compute_aggregates(result.rows);
  result.total_wall_seconds =
      std::accumulate(result.wall_seconds.begin(), result.wall_seconds.end(), 0.0);
  return result;
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path.string());
  out << kCsvHeader << '\n';
  for (const SweepRow& r : result.rows) {
    out << "trial," << r.m << ',' << r.solver << ',' << r.trial << ',' << format_double(r.d_s)
        << ',' << format_double(r.l2_per_coord) << ',' << format_double(r.final_loss) << ','
        << format_double(r.tau1) << ',' << format_double(r.tau2) << ',' << r.status << ",,,,\n";
  }
  for (const SweepAggregate& a : result.aggregates) {
    out << "agg," << a.m << ',' << a.solver << ',' << a.count << ',' << format_double(a.d_s_mean)
        << ',' << format_double(a.l2_mean) << ',' << format_double(a.final_loss_mean) << ','
        << format_double(a.tau1_mean) << ',' << format_double(a.tau2_mean) << ",,"
        << format_double(a.d_s_std) << ',' << format_double(a.d_s_errbar) << ','
        << format_double(a.l2_std) << ',' << format_double(a.l2_errbar) << '\n';
  }
  if (!out) throw std::runtime_error("emit_csv: write failed for " + path.string());
  out.close();

  nlohmann::json meta;
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%FT%TZ", &tm_utc);
  meta["created_utc"] = stamp;
  meta["model_id"] = result.model_id;
  meta["master_seed"] = result.master_seed;
  meta["rows"] = result.rows.size();
  meta["total_wall_seconds"] = result.total_wall_seconds;
  meta["wall_seconds"] = result.wall_seconds;
  std::ofstream side(path.string() + ".meta.json");
  if (!side) throw std::runtime_error("emit_csv: cannot open sidecar for " + path.string());
  side << meta.dump(2) << '\n';
}

SweepResult load_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_sweep_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("load_sweep_csv: unrecognized header in " + path.string());
  }

  SweepResult result;
  std::vector<SweepAggregate> from_file;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 14) throw std::runtime_error(where + ": expected 14 fields");
    if (f[0] == "trial") {
      SweepRow r;
      r.m = static_cast<Eigen::Index>(parse_int(f[1], where));
      r.solver = f[2];
      r.trial = static_cast<int>(parse_int(f[3], where));
      r.d_s = parse_double(f[4], where);
      r.l2_per_coord = parse_double(f[5], where);
      r.final_loss = parse_double(f[6], where);
      r.tau1 = parse_double(f[7], where);
      r.tau2 = parse_double(f[8], where);
      r.status = f[9];
      result.rows.push_back(std::move(r));
    } else if (f[0] == "agg") {
      SweepAggregate a;
      a.m = static_cast<Eigen::Index>(parse_int(f[1], where));
      a.solver = f[2];
      a.count = static_cast<int>(parse_int(f[3], where));
      a.d_s_mean = parse_double(f[4], where);
      a.l2_mean = parse_double(f[5], where);
      a.final_loss_mean = parse_double(f[6], where);
      a.tau1_mean = parse_double(f[7], where);
      a.tau2_mean = parse_double(f[8], where);
      a.d_s_std = parse_double(f[10], where);
      a.d_s_errbar = parse_double(f[11], where);
      a.l2_std = parse_double(f[12], where);
      a.l2_errbar = parse_double(f[13], where);
      from_file.push_back(std::move(a));
    } else {
      throw std::runtime_error(where + ": unknown row kind '" + f[0] + "'");
    }
  }

  canonical_sort(result);
  result.aggregates = compute_aggregates(result.rows);
  if (from_file.size() != result.aggregates.size()) {
    throw std::runtime_error("load_sweep_csv: aggregate row count mismatch");
  }
  for (std::size_t i = 0; i < from_file.size(); ++i) {
    const SweepAggregate& a = from_file[i];
    const SweepAggregate& b = result.aggregates[i];
    const bool same = a.m == b.m && a.solver == b.solver && a.count == b.count &&
                      same_value(a.d_s_mean, b.d_s_mean) && same_value(a.l2_mean, b.l2_mean) &&
                      same_value(a.final_loss_mean, b.final_loss_mean) &&
                      same_value(a.tau1_mean, b.tau1_mean) &&
                      same_value(a.tau2_mean, b.tau2_mean) &&
                      same_value(a.d_s_std, b.d_s_std) &&
                      same_value(a.d_s_errbar, b.d_s_errbar) &&
                      same_value(a.l2_std, b.l2_std) && same_value(a.l2_errbar, b.l2_errbar);
    if (!same) {
      throw std::runtime_error("load_sweep_csv: aggregates do not match the trial rows (m=" +
                               std::to_string(a.m) + ", solver=" + a.solver + ")");
    }
  }
  return result;
}

Eigen::VectorXd load_vector_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_vector_text: cannot open " + path.string());
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    values.push_back(parse_double(token, path.string()));
  }
  if (values.empty()) throw std::runtime_error("load_vector_text: no values in " + path.string());
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void save_vector_text(const Eigen::VectorXd& v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_vector_text: cannot open " + path.string());
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
  if (!out) throw std::runtime_error("save_vector_text: write failed for " + path.string());
}

}  // namespace onebit
