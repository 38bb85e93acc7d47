// Command-line front end: sweeps, verifiers, range projection, measurement.
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "onebit/embed.hpp"
#include "onebit/errors.hpp"
#include "onebit/genmodel.hpp"
#include "onebit/lasso.hpp"
#include "onebit/measure.hpp"
#include "onebit/recover.hpp"
#include "onebit/rng.hpp"
#include "onebit/sweep.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
  std::uint64_t seed = 0;
  std::string out;
  bool json_out = false;
};

struct ModelFlags {
  std::string kind = "group-sparse";
  long long n = 0;
  long long k = 0;
  double r = 1.0;
  double x_max = 0.0;
  double x_c = 1.0;
  double r_min = 0.0;
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
  cmd->add_option("--model", mf.kind, "Model kind: group-sparse or ffnet:<manifest>");
  cmd->add_option("--n", mf.n, "Ambient dimension (group-sparse)");
  cmd->add_option("--k", mf.k, "Latent dimension (group-sparse)");
  cmd->add_option("--r", mf.r, "Latent ball radius");
  cmd->add_option("--x-max", mf.x_max, "Triangle amplitude (0 = default)");
  cmd->add_option("--x-c", mf.x_c, "Constant-block amplitude");
  cmd->add_option("--r-min", mf.r_min, "Wrap ffnet in the sphere normalizer with this norm floor");
}

onebit::ModelSpec to_spec(const ModelFlags& mf) {
  if (mf.kind == "group-sparse" && (mf.n < 1 || mf.k < 1)) {
    throw onebit::ConfigError("group-sparse model needs --n and --k");
  }
  onebit::ModelSpec spec;
  spec.kind = mf.kind;
  spec.n = mf.n;
  spec.k = mf.k;
  spec.r = mf.r;
  spec.x_max = mf.x_max;
  spec.x_c = mf.x_c;
  spec.r_min = mf.r_min;
  return spec;
}

// Writes the report to --out when given; prints JSON (always for verifiers,
// with --json elsewhere) or the short human line otherwise.
void deliver(const json& report, const GlobalOpts& g, const std::string& human) {
  if (!g.out.empty()) {
    std::ofstream f(g.out);
    if (!f) throw std::runtime_error("cannot open " + g.out);
    f << report.dump(2) << '\n';
  }
  if (g.json_out || human.empty()) {
    std::cout << report.dump(2) << std::endl;
  } else {
    std::cout << human << std::endl;
  }
}

Eigen::VectorXd random_unit(onebit::Rng& rng, Eigen::Index n) {
  return rng.gaussian_vector(n).normalized();
}

// Unit pair with chord at least epsilon, by rejection.
std::pair<Eigen::VectorXd, Eigen::VectorXd> far_pair(onebit::Rng& rng, Eigen::Index n,
                                                     double epsilon) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Eigen::VectorXd x = random_unit(rng, n);
    Eigen::VectorXd s = random_unit(rng, n);
    if ((x - s).norm() >= epsilon) return {std::move(x), std::move(s)};
  }
  throw onebit::ConfigError("cannot sample a pair separated by --epsilon; is it > 2?");
}

// Unit pair with chord at most epsilon: step along a unit tangent by
// epsilon/2 and renormalize (the chord only shrinks under normalization).
std::pair<Eigen::VectorXd, Eigen::VectorXd> near_pair(onebit::Rng& rng, Eigen::Index n,
                                                      double epsilon) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Eigen::VectorXd x = random_unit(rng, n);
    Eigen::VectorXd g = rng.gaussian_vector(n);
    Eigen::VectorXd w = g - g.dot(x) * x;
    if (w.norm() < 1e-12) continue;
    Eigen::VectorXd s = (x + (epsilon / 2.0) * w.normalized()).normalized();
    if ((x - s).norm() <= epsilon) return {std::move(x), std::move(s)};
  }
  throw onebit::ConfigError("cannot sample a pair within --epsilon");
}

int exit_code_for_parse(CLI::App& app, const CLI::ParseError& e) {
  const int code = app.exit(e);
  return code == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1-bit compressive sensing over generative priors"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Master seed (default 0)");
  app.add_option("--out", g.out, "Primary output file of the subcommand");
  app.add_flag("--json", g.json_out, "Print a JSON report to stdout");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run an experiment grid from a config file");
  sweep->fallthrough();
  std::string sweep_config;
  long long sweep_trials = -1;
  std::vector<long long> sweep_m;
  sweep->add_option("--config", sweep_config, "Experiment config file")->required();
  sweep->add_option("--trials", sweep_trials, "Override trials per cell");
  sweep->add_option("--m", sweep_m, "Override the m grid")->delimiter(',');
  sweep->callback([&] {
    onebit::ExperimentConfig cfg = onebit::ExperimentConfig::from_file(sweep_config);
    if (app.count("--seed") > 0) cfg.master_seed = g.seed;
    if (sweep_trials >= 0) cfg.trials = static_cast<int>(sweep_trials);
    if (!sweep_m.empty()) {
      cfg.m_grid.clear();
      for (long long m : sweep_m) cfg.m_grid.push_back(static_cast<Eigen::Index>(m));
    }
    if (!g.out.empty()) cfg.out_path = g.out;
    onebit::SweepResult result = onebit::run_sweep(cfg);
    onebit::emit_csv(result, cfg.out_path);
    json agg = json::array();
    for (const onebit::SweepAggregate& a : result.aggregates) {
      agg.push_back({{"m", a.m},
                     {"solver", a.solver},
                     {"count", a.count},
                     {"d_s_mean", a.d_s_mean},
                     {"d_s_errbar", a.d_s_errbar},
                     {"l2_mean", a.l2_mean},
                     {"final_loss_mean", a.final_loss_mean},
                     {"tau1_mean", a.tau1_mean},
                     {"tau2_mean", a.tau2_mean}});
    }
    const json report = {{"out", cfg.out_path},
                         {"model_id", result.model_id},
                         {"master_seed", result.master_seed},
                         {"rows", result.rows.size()},
                         {"total_wall_seconds", result.total_wall_seconds},
                         {"aggregates", agg}};
    if (g.json_out) {
      std::cout << report.dump(2) << std::endl;
    } else {
      std::cout << "wrote " << cfg.out_path << ": " << result.rows.size() << " trial rows, "
                << result.aggregates.size() << " cells, "
                << result.total_wall_seconds << "s" << std::endl;
    }
  });

  // verify
  auto* verify = app.add_subcommand("verify", "Run a named empirical verifier");
  verify->fallthrough();
  verify->require_subcommand(1);

  {
    auto* c = verify->add_subcommand("lemma4", "Sign-flip probability equals geodesic distance");
    c->fallthrough();
    static long long n = 10, m = 1000, trials = 100;
    c->add_option("--n", n, "Ambient dimension");
    c->add_option("--m", m, "Rows per matrix");
    c->add_option("--trials", trials, "Fresh matrices");
    c->callback([&] {
      onebit::Rng rng(g.seed);
      const Eigen::VectorXd x = random_unit(rng, n);
      const Eigen::VectorXd s = random_unit(rng, n);
      const double ds = onebit::geodesic_dist(x, s);
      const double mean =
          onebit::verify_sign_flip_prob(x, s, m, static_cast<int>(trials),
                                        onebit::derive_seed(g.seed, 1));
      const double se = std::sqrt(std::max(ds * (1.0 - ds), 1e-12) /
                                  static_cast<double>(m * trials));
      deliver({{"name", "lemma4"},
               {"n", n},
               {"m", m},
               {"trials", trials},
               {"seed", g.seed},
               {"d_s", ds},
               {"empirical_mean", mean},
               {"abs_diff", std::abs(mean - ds)},
               {"four_se", 4.0 * se},
               {"within_four_se", std::abs(mean - ds) <= 4.0 * se}},
              g, "");
    });
  }

  {
    auto* c = verify->add_subcommand("lemma1", "Hyperplane separation rate for far pairs");
    c->fallthrough();
    static long long n = 10, trials = 100000;
    static double epsilon = 0.5;
    c->add_option("--n", n, "Ambient dimension");
    c->add_option("--epsilon", epsilon, "Separation level");
    c->add_option("--trials", trials, "Gaussian draws");
    c->callback([&] {
      onebit::Rng rng(g.seed);
      const auto [x, s] = far_pair(rng, n, epsilon);
      const double freq = onebit::verify_sep_lemma(x, s, epsilon, static_cast<int>(trials),
                                                   onebit::derive_seed(g.seed, 1));
      const double bound = epsilon / 12.0;
      deliver({{"name", "lemma1"},
               {"n", n},
               {"epsilon", epsilon},
               {"separation", (x - s).norm()},
               {"trials", trials},
               {"seed", g.seed},
               {"frequency", freq},
               {"bound", bound},
               {"pass", freq >= bound - 0.01}},
              g, "");
    });
  }

  {
    auto* c = verify->add_subcommand("lemma1-near", "Consistent-side rate for near pairs");
    c->fallthrough();
    static long long n = 10, trials = 100000;
    static double epsilon = 0.5;
    c->add_option("--n", n, "Ambient dimension");
    c->add_option("--epsilon", epsilon, "Closeness level");
    c->add_option("--trials", trials, "Gaussian draws");
    c->callback([&] {
      onebit::Rng rng(g.seed);
      const auto [x, s] = near_pair(rng, n, epsilon);
      const double freq = onebit::verify_sep_lemma_near(x, s, epsilon, static_cast<int>(trials),
                                                        onebit::derive_seed(g.seed, 1));
      const double bound = 1.0 - 2.0 * epsilon / 3.0;
      deliver({{"name", "lemma1-near"},
               {"n", n},
               {"epsilon", epsilon},
               {"separation", (x - s).norm()},
               {"trials", trials},
               {"seed", g.seed},
               {"frequency", freq},
               {"bound", bound},
               {"pass", freq >= bound - 0.01}},
              g, "");
    });
  }

  {
    auto* c = verify->add_subcommand("lemma2", "Norm preservation of A/sqrt(m)");
    c->fallthrough();
    static long long n = 50, m = 1000, trials = 100;
    static double epsilon = 0.3;
    c->add_option("--n", n, "Ambient dimension");
    c->add_option("--m", m, "Rows");
    c->add_option("--epsilon", epsilon, "Relative norm tolerance, in (0,1)");
    c->add_option("--trials", trials, "Fresh matrices");
    c->callback([&] {
      onebit::Rng rng(g.seed);
      const Eigen::VectorXd x = random_unit(rng, n);
      const double rate = onebit::verify_norm_preservation(x, m, epsilon, static_cast<int>(trials),
                                                           onebit::derive_seed(g.seed, 1));
      const double exponent = epsilon * epsilon * (1.0 - epsilon) * static_cast<double>(m) / 4.0;
      const double bound = 1.0 - 2.0 * std::exp(-exponent);
      deliver({{"name", "lemma2"},
               {"n", n},
               {"m", m},
               {"epsilon", epsilon},
               {"trials", trials},
               {"seed", g.seed},
               {"success_rate", rate},
               {"predicted_lower_bound", bound},
               {"pass", rate >= bound - 0.02}},
              g, "");
    });
  }

  {
    auto* c = verify->add_subcommand("lemma6", "Geodesic vs chord sandwich (exact)");
    c->fallthrough();
    static long long n = 20, pairs = 100000;
    c->add_option("--n", n, "Ambient dimension");
    c->add_option("--pairs", pairs, "Random unit pairs");
    c->callback([&] {
      const Eigen::Index violations = onebit::verify_metric_sandwich(n, pairs, g.seed);
      deliver({{"name", "lemma6"},
               {"n", n},
               {"pairs", pairs},
               {"seed", g.seed},
               {"violations", violations},
               {"pass", violations == 0}},
              g, "");
    });
  }

  {
    auto* c = verify->add_subcommand("bese", "Binary embedding deviation over the model range");
    c->fallthrough();
    static ModelFlags mf;
    static long long m = 2000, pairs = 1000;
    add_model_flags(c, mf);
    c->add_option("--m", m, "Measurement rows");
    c->add_option("--pairs", pairs, "Latent pairs");
    c->callback([&] {
      const auto model = to_spec(mf).make_model();
      const onebit::MeasurementEnsemble A =
          onebit::gaussian_matrix(m, model->ambient_dim(), onebit::derive_seed(g.seed, 1));
      const onebit::EmbeddingReport report =
          onebit::bese_deviation(*model, A, pairs, onebit::derive_seed(g.seed, 2));
      json j = json::parse(report.to_json());
      j["name"] = "bese";
      deliver(j, g, "");
    });
  }

  {
    auto* c = verify->add_subcommand("local-embed", "Hamming behaviour of far vs near pairs");
    c->fallthrough();
    static ModelFlags mf;
    static long long m = 2000, pairs = 10000;
    static double epsilon = 0.5;
    add_model_flags(c, mf);
    c->add_option("--m", m, "Measurement rows");
    c->add_option("--pairs", pairs, "Latent pairs");
    c->add_option("--epsilon", epsilon, "Far/near split level");
    c->callback([&] {
      const auto model = to_spec(mf).make_model();
      const onebit::MeasurementEnsemble A =
          onebit::gaussian_matrix(m, model->ambient_dim(), onebit::derive_seed(g.seed, 1));
      const onebit::LocalEmbeddingReport report = onebit::local_embedding_check(
          *model, A, epsilon, pairs, onebit::derive_seed(g.seed, 2));
      json j = json::parse(report.to_json());
      j["name"] = "local-embed";
      deliver(j, g, "");
    });
  }

  {
    auto* c = verify->add_subcommand("epsilon-net", "Grid net construction and covering check");
    c->fallthrough();
    static long long k = 2, probes = 10000;
    static double r = 1.0, delta = 0.25;
    c->add_option("--k", k, "Latent dimension (<= 3)");
    c->add_option("--r", r, "Ball radius");
    c->add_option("--delta", delta, "Net resolution");
    c->add_option("--probes", probes, "Random covering probes");
    c->callback([&] {
      const onebit::EpsilonNet net = onebit::build_epsilon_net(k, r, delta);
      const bool certified = net.certify_covering(probes, onebit::derive_seed(g.seed, 1));
      json j = json::parse(net.to_json());
      j["name"] = "epsilon-net";
      j["probes"] = probes;
      j["certified"] = certified;
      deliver(j, g, "");
    });
  }

  {
    auto* c = verify->add_subcommand("noisy-bound",
                                     "Recovery error bound d_S <= eps + tau1 + tau2");
    c->fallthrough();
    static ModelFlags mf;
    static long long m = 2000, trials = 50, bese_pairs = 2000;
    static std::string noise_kind = "sign_flip";
    static double sigma = 0.2, flip_prob = 0.05;
    static double step_size = 0.0;
    static long long outer_iters = 15, restarts = 4, inner_steps = 200;
    static double inner_lr = 0.1;
    add_model_flags(c, mf);
    c->add_option("--m", m, "Measurement rows");
    c->add_option("--trials", trials, "Planted recovery trials");
    c->add_option("--bese-pairs", bese_pairs, "Pairs for the eps-hat estimate");
    c->add_option("--noise", noise_kind, "Noise kind")
        ->check(CLI::IsMember({"none", "gaussian", "sign_flip"}));
    c->add_option("--sigma", sigma, "Gaussian noise level");
    c->add_option("--flip-prob", flip_prob, "Sign flip probability");
    c->add_option("--step-size", step_size, "PGD step size (0 = 1.25/sqrt(m))");
    c->add_option("--outer-iters", outer_iters, "PGD outer iterations");
    c->add_option("--restarts", restarts, "Projection restarts");
    c->add_option("--inner-steps", inner_steps, "Projection descent steps");
    c->add_option("--inner-lr", inner_lr, "Projection descent rate");
    c->callback([&] {
      const auto model = to_spec(mf).make_model();
      const onebit::MeasurementEnsemble A =
          onebit::gaussian_matrix(m, model->ambient_dim(), onebit::derive_seed(g.seed, 1));
      onebit::NoiseSpec noise;
      if (noise_kind == "gaussian") {
        noise = onebit::NoiseSpec::gaussian(sigma, 0);
      } else if (noise_kind == "sign_flip") {
        noise = onebit::NoiseSpec::sign_flip(flip_prob, 0);
      }
      onebit::RecoveryConfig rc;
      rc.step_size = step_size > 0.0 ? step_size : 1.25 / std::sqrt(static_cast<double>(m));
      rc.outer_iters = static_cast<int>(outer_iters);
      rc.restarts = static_cast<int>(restarts);
      rc.inner_steps = static_cast<int>(inner_steps);
      rc.inner_lr = inner_lr;
      const onebit::NoisyBoundReport report = onebit::noisy_bound_check(
          *model, A, noise, "pgd1bit", rc, static_cast<int>(trials),
          onebit::derive_seed(g.seed, 2), bese_pairs);
      json j = json::parse(report.to_json());
      j["name"] = "noisy-bound";
      j["pass"] = report.violations == 0;
      deliver(j, g, "");
    });
  }

  // project
  auto* project = app.add_subcommand("project", "Project an ambient point onto a model's range");
  project->fallthrough();
  static ModelFlags proj_mf;
  static std::string proj_input;
  static long long proj_restarts = 4, proj_inner_steps = 200;
  static double proj_inner_lr = 0.1;
  add_model_flags(project, proj_mf);
  project->add_option("--input", proj_input, "Text file with the ambient vector")->required();
  project->add_option("--restarts", proj_restarts, "Descent restarts (gradient models)");
  project->add_option("--inner-steps", proj_inner_steps, "Descent steps per restart");
  project->add_option("--inner-lr", proj_inner_lr, "Descent rate");
  project->callback([&] {
    const auto model = to_spec(proj_mf).make_model();
    const Eigen::VectorXd y = onebit::load_vector_text(proj_input);
    onebit::RecoveryConfig rc;
    rc.restarts = static_cast<int>(proj_restarts);
    rc.inner_steps = static_cast<int>(proj_inner_steps);
    rc.inner_lr = proj_inner_lr;
    rc.seed = g.seed;
    const onebit::ProjectionResult pr = onebit::project_range(*model, y, rc);
    if (!g.out.empty()) onebit::save_vector_text(pr.point, g.out);
    json j = {{"distance", pr.distance},
              {"restart_index", pr.restart_index},
              {"latent", std::vector<double>(pr.latent.data(), pr.latent.data() + pr.latent.size())},
              {"point_norm", pr.point.norm()}};
    if (!g.out.empty()) j["out"] = g.out;
    if (g.json_out) {
      std::cout << j.dump(2) << std::endl;
    } else {
      std::cout << "distance " << pr.distance << " (restart " << pr.restart_index << ")"
                << (g.out.empty() ? "" : ", wrote " + g.out) << std::endl;
    }
  });

  // measure
  auto* measure = app.add_subcommand("measure", "Take 1-bit measurements of a vector");
  measure->fallthrough();
  static std::string meas_input;
  static long long meas_m = 0;
  static std::string meas_noise = "none";
  static double meas_sigma = 0.0, meas_flip = 0.0;
  static std::string meas_save_matrix;
  measure->add_option("--input", meas_input, "Text file with the signal vector")->required();
  measure->add_option("--m", meas_m, "Measurement rows")->required();
  measure->add_option("--noise", meas_noise, "Noise kind")
      ->check(CLI::IsMember({"none", "gaussian", "sign_flip"}));
  measure->add_option("--sigma", meas_sigma, "Gaussian noise level");
  measure->add_option("--flip-prob", meas_flip, "Sign flip probability");
  measure->add_option("--save-matrix", meas_save_matrix, "Also save the matrix (binary format)");
  measure->callback([&] {
    const Eigen::VectorXd x = onebit::load_vector_text(meas_input);
    const onebit::MeasurementEnsemble A =
        onebit::gaussian_matrix(meas_m, x.size(), onebit::derive_seed(g.seed, 1));
    onebit::NoiseSpec noise;
    if (meas_noise == "gaussian") {
      noise = onebit::NoiseSpec::gaussian(meas_sigma, onebit::derive_seed(g.seed, 2));
    } else if (meas_noise == "sign_flip") {
      noise = onebit::NoiseSpec::sign_flip(meas_flip, onebit::derive_seed(g.seed, 2));
    }
    const onebit::SignPattern b = onebit::noisy_sign_measure(A, x, noise);
    std::string bits(static_cast<std::size_t>(b.size()), '+');
    for (Eigen::Index i = 0; i < b.size(); ++i) bits[static_cast<std::size_t>(i)] = b[i] > 0 ? '+' : '-';
    if (!meas_save_matrix.empty()) onebit::save_matrix(A, meas_save_matrix);
    if (!g.out.empty()) {
      std::ofstream f(g.out);
      if (!f) throw std::runtime_error("cannot open " + g.out);
      f << bits << '\n';
    }
    if (g.json_out) {
      json j = {{"m", meas_m}, {"n", x.size()}, {"seed", g.seed}, {"bits", bits}};
      if (!meas_save_matrix.empty()) j["matrix"] = meas_save_matrix;
      if (!g.out.empty()) j["out"] = g.out;
      std::cout << j.dump(2) << std::endl;
    } else {
      std::cout << bits << std::endl;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return exit_code_for_parse(app, e);
  } catch (const onebit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
