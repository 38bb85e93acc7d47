#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "onebit/errors.hpp"
#include "onebit/genmodel.hpp"
#include "onebit/sweep.hpp"

using namespace onebit;

namespace {

constexpr const char* kHeader =
    "row,m,solver,trial,d_s,l2_per_coord,final_loss,tau1,tau2,status,"
    "d_s_std,d_s_errbar,l2_std,l2_errbar";

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.model.kind = "group-sparse";
  cfg.model.n = 12;
  cfg.model.k = 2;
  cfg.m_grid = {40, 80};
  cfg.trials = 3;
  cfg.master_seed = 5;
  SolverSpec pgd;
  pgd.name = "pgd1bit";
  pgd.label = "pgd";
  pgd.recovery.step_size = 0.0125;
  pgd.recovery.outer_iters = 15;
  SolverSpec bi;
  bi.name = "biht";
  bi.label = "biht";
  bi.sparsity = 2;
  SolverSpec la;
  la.name = "lasso";
  la.label = "lasso";
  SolverSpec lb;
  lb.name = "lasso1bit";
  lb.label = "lasso1bit";
  cfg.solvers = {pgd, bi, la, lb};
  return cfg;
}

const SweepRow& find_row(const SweepResult& res, Eigen::Index m, const std::string& solver,
                         int trial) {
  for (const SweepRow& r : res.rows) {
    if (r.m == m && r.solver == solver && r.trial == trial) return r;
  }
  REQUIRE(false);
  return res.rows.front();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

FeedForwardModel positive_tanh_net() {
  Rng rng(71);
  Layer l;
  l.weights = Eigen::MatrixXd::NullaryExpr(
      4, 2, [&](Eigen::Index, Eigen::Index) { return 0.3 * (2 * rng.uniform() - 1); });
  l.offsets = Eigen::VectorXd::Constant(4, 1.0);
  l.activation = Activation::tanh;
  return FeedForwardModel({l}, 1.0);
}

}  // namespace

TEST_CASE("ModelSpec builds group-sparse models with default or explicit amplitudes") {
  ModelSpec def;
  def.kind = "group-sparse";
  def.n = 12;
  def.k = 2;
  auto m_def = def.make_model();
  ModelSpec exp = def;
  exp.x_max = std::sqrt(3.0);
  exp.x_c = 1.0;
  auto m_exp = exp.make_model();
  Eigen::VectorXd z = Rng(72).uniform_ball(2, 1.0);
  CHECK(m_def->forward(z) == m_exp->forward(z));
  CHECK(m_def->describe().find("group") != std::string::npos);

  ModelSpec bad = def;
  bad.n = 13;  // not divisible into k blocks
  CHECK_THROWS_AS(bad.make_model(), std::invalid_argument);

  ModelSpec unknown;
  unknown.kind = "vae";
  CHECK_THROWS_AS(unknown.make_model(), ConfigError);

  ModelSpec missing;
  missing.kind = "ffnet:/nonexistent/net.json";
  CHECK_THROWS_AS(missing.make_model(), ConfigError);
}

TEST_CASE("ModelSpec loads networks and enforces declared shapes") {
  testutil::TempDir dir;
  FeedForwardModel net = positive_tanh_net();
  net.save(dir.file("net.json"));

  ModelSpec spec;
  spec.kind = "ffnet:" + dir.file("net.json").string();
  auto raw = spec.make_model();
  CHECK(raw->ambient_dim() == 4);
  CHECK(raw->latent_dim() == 2);

  spec.r_min = 0.3;
  auto normalized = spec.make_model();
  CHECK(normalized->describe().find("normalized") != std::string::npos);
  CHECK(std::abs(normalized->forward(Eigen::VectorXd::Zero(2)).norm() - 1.0) <= 1e-12);

  spec.n = 5;
  CHECK_THROWS_AS(spec.make_model(), ConfigError);
  spec.n = 4;
  spec.k = 3;
  CHECK_THROWS_AS(spec.make_model(), ConfigError);
}

TEST_CASE("ExperimentConfig parses a complete document with defaults") {
  ConfigDoc doc = ConfigDoc::parse_string(
      "out = \"runs/fig.csv\"\n"
      "master_seed = 99\n"
      "trials = 4\n"
      "m_grid = [50, 100]\n"
      "sampling = \"blocks\"\n"
      "[model]\n"
      "kind = \"group-sparse\"\n"
      "n = 60\n"
      "k = 3\n"
      "[noise]\n"
      "kind = \"sign_flip\"\n"
      "flip_prob = 0.05\n"
      "[[solvers]]\n"
      "name = \"pgd1bit\"\n"
      "step_size = 0.002\n"
      "outer_iters = 30\n"
      "[[solvers]]\n"
      "name = \"biht\"\n"
      "label = \"biht3\"\n"
      "sparsity = 3\n");
  ExperimentConfig cfg = ExperimentConfig::from_doc(doc, ".");
  CHECK(cfg.out_path == "runs/fig.csv");
  CHECK(cfg.master_seed == 99);
  CHECK(cfg.trials == 4);
  CHECK(cfg.m_grid == std::vector<Eigen::Index>{50, 100});
  CHECK(cfg.sampling == "blocks");
  CHECK(cfg.model.n == 60);
  CHECK(cfg.noise.kind == NoiseSpec::Kind::sign_flip);
  CHECK(cfg.noise.flip_prob == 0.05);
  REQUIRE(cfg.solvers.size() == 2);
  CHECK(cfg.solvers[0].label == "pgd1bit");  // label defaults to the name
  CHECK(cfg.solvers[0].recovery.step_size == 0.002);
  CHECK(cfg.solvers[0].recovery.outer_iters == 30);
  CHECK(cfg.solvers[1].label == "biht3");
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("ExperimentConfig rejects unknown keys, sections, and bad values") {
  auto parse = [](const std::string& text) {
    return ExperimentConfig::from_doc(ConfigDoc::parse_string(text), ".");
  };
  const std::string basis =
      "m_grid = [40]\n[model]\nkind = \"group-sparse\"\nn = 12\nk = 2\n"
      "[[solvers]]\nname = \"biht\"\n";
  CHECK_NOTHROW(parse(basis).validate());
  CHECK_THROWS_AS(parse("typo = 1\n" + basis), ConfigError);
  CHECK_THROWS_AS(parse(basis + "[extra]\na = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse(basis + "[[extras]]\na = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("master_seed = -4\n" + basis), ConfigError);
  CHECK_THROWS_AS(parse("m_grid = [40]\n[model]\nkind = \"group-sparse\"\nn = 12\nk = 2\n"
                        "[[solvers]]\nname = \"biht\"\nouter_iters = 30\n"),
                  ConfigError);  // pgd knob on a biht entry
  CHECK_THROWS_AS(parse("m_grid = [40]\n[model]\nkind = \"group-sparse\"\nn = 12\nk = 2\n"
                        "[[solvers]]\nname = \"newton\"\n"),
                  ConfigError);
}

TEST_CASE("ExperimentConfig::validate reports each inconsistency") {
  ExperimentConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());

  ExperimentConfig c = cfg;
  c.m_grid.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.m_grid = {0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.solvers.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.sampling = "grid";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.out_path = "";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.model.r_min = 0.5;  // normalizer floor is an ffnet-only knob
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.solvers[1].label = cfg.solvers[0].label;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.solvers[1].sparsity = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.solvers[0].recovery.step_size = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = cfg;
  c.noise.flip_prob = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("run_sweep covers the grid with consistent metric columns") {
  ExperimentConfig cfg = small_config();
  SweepResult res = run_sweep(cfg);

  CHECK(res.rows.size() == 2 * 4 * 3);
  CHECK(res.master_seed == 5);
  CHECK(res.model_id.find("group") != std::string::npos);
  CHECK(res.wall_seconds.size() == res.rows.size());
  CHECK(res.aggregates.size() == 2 * 4);

  for (std::size_t i = 1; i < res.rows.size(); ++i) {
    const SweepRow& a = res.rows[i - 1];
    const SweepRow& b = res.rows[i];
    bool ordered = a.m < b.m || (a.m == b.m && a.solver < b.solver) ||
                   (a.m == b.m && a.solver == b.solver && a.trial < b.trial);
    CHECK(ordered);
  }

  for (const SweepRow& r : res.rows) {
    CHECK(r.status == "ok");
    CHECK(r.tau1 == 0.0);  // noiseless sweep
    CHECK(r.d_s >= 0.0);
    CHECK(r.d_s <= 1.0);
    CHECK(r.final_loss >= 0.0);
    CHECK(r.tau2 >= 0.0);
    double chord = r.l2_per_coord * 12;
    CHECK(r.d_s >= chord / 3.15);
    CHECK(r.d_s <= chord / 2.0 + 1e-12);
  }

  for (const SweepAggregate& a : res.aggregates) {
    CHECK(a.count == 3);
    CHECK(a.d_s_errbar == 0.5 * a.d_s_std);
  }
}

TEST_CASE("rows are invariant to the rest of the measurement grid") {
  ExperimentConfig full = small_config();
  ExperimentConfig mono = small_config();
  mono.m_grid = {80};
  SweepResult res_full = run_sweep(full);
  SweepResult res_mono = run_sweep(mono);
  for (const std::string& solver : {"pgd", "biht", "lasso", "lasso1bit"}) {
    for (int trial = 0; trial < 3; ++trial) {
      const SweepRow& a = find_row(res_full, 80, solver, trial);
      const SweepRow& b = find_row(res_mono, 80, solver, trial);
      CHECK(a.d_s == b.d_s);
      CHECK(a.l2_per_coord == b.l2_per_coord);
      CHECK(a.final_loss == b.final_loss);
      CHECK(a.tau2 == b.tau2);
      CHECK(a.status == b.status);
    }
  }
}

TEST_CASE("sign-flip noise shows up in tau1 for every row") {
  ExperimentConfig cfg = small_config();
  cfg.m_grid = {60};
  cfg.noise = NoiseSpec::sign_flip(0.1, 17);
  SweepResult res = run_sweep(cfg);
  for (const SweepRow& r : res.rows) {
    CHECK(r.tau1 > 0.0);
    CHECK(r.tau1 < 0.3);
  }
}

TEST_CASE("explicit latent seeds replant the same signal across trials") {
  ExperimentConfig cfg = small_config();
  cfg.m_grid = {60};
  cfg.solvers.resize(1);  // pgd only
  cfg.trials = 2;
  cfg.latent_seeds = {123};  // both trials share one latent stream
  SweepResult res = run_sweep(cfg);
  CHECK(res.rows.size() == 2);
  // same planted signal, different matrices: rows exist and carry ok status
  for (const SweepRow& r : res.rows) CHECK(r.status == "ok");
}

TEST_CASE("compute_aggregates matches a hand evaluation") {
  auto row = [](Eigen::Index m, const std::string& s, int t, double v,
                const std::string& status) {
    SweepRow r;
    r.m = m;
    r.solver = s;
    r.trial = t;
    r.d_s = v;
    r.l2_per_coord = v;
    r.final_loss = v;
    r.tau1 = v;
    r.tau2 = v;
    r.status = status;
    return r;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRow> rows = {
      row(10, "s", 0, 1.0, "ok"),
      row(10, "s", 1, 2.0, "ok"),
      row(10, "s", 2, 3.0, "ok"),
      row(10, "s", 3, nan, "diverged"),
      row(20, "s", 0, 0.25, "ok"),
      row(30, "s", 0, nan, "diverged"),
  };
  std::vector<SweepAggregate> aggs = compute_aggregates(rows);
  REQUIRE(aggs.size() == 3);

  CHECK(aggs[0].m == 10);
  CHECK(aggs[0].count == 3);
  CHECK(aggs[0].d_s_mean == 2.0);
  CHECK(aggs[0].d_s_std == 1.0);
  CHECK(aggs[0].d_s_errbar == 0.5);
  CHECK(aggs[0].l2_mean == 2.0);
  CHECK(aggs[0].tau1_mean == 2.0);

  CHECK(aggs[1].m == 20);
  CHECK(aggs[1].count == 1);
  CHECK(aggs[1].d_s_mean == 0.25);
  CHECK(aggs[1].d_s_std == 0.0);
  CHECK(aggs[1].d_s_errbar == 0.0);

  CHECK(aggs[2].m == 30);
  CHECK(aggs[2].count == 0);
  CHECK(std::isnan(aggs[2].d_s_mean));
}

TEST_CASE("emit_csv writes the pinned schema and round-trips bit for bit") {
  testutil::TempDir dir;
  ExperimentConfig cfg = small_config();
  cfg.m_grid = {40};
  cfg.trials = 2;
  cfg.solvers.resize(2);  // pgd + biht keeps this quick
  SweepResult res = run_sweep(cfg);

  auto path = dir.file("out.csv");
  emit_csv(res, path);
  std::string text = testutil::read_file(path);

  std::istringstream lines(text);
  std::string header;
  std::getline(lines, header);
  CHECK(header == kHeader);
  std::string line;
  int trial_rows = 0;
  int agg_rows = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("trial,", 0) == 0) {
      ++trial_rows;
      CHECK(line.substr(line.size() - 4) == ",,,,");
    } else if (line.rfind("agg,", 0) == 0) {
      ++agg_rows;
    }
    CHECK(std::count(line.begin(), line.end(), ',') == 13);
  }
  CHECK(trial_rows == 4);
  CHECK(agg_rows == 2);

  SweepResult loaded = load_sweep_csv(path);
  REQUIRE(loaded.rows.size() == res.rows.size());
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    CHECK(loaded.rows[i].m == res.rows[i].m);
    CHECK(loaded.rows[i].solver == res.rows[i].solver);
    CHECK(loaded.rows[i].trial == res.rows[i].trial);
    CHECK(loaded.rows[i].d_s == res.rows[i].d_s);
    CHECK(loaded.rows[i].l2_per_coord == res.rows[i].l2_per_coord);
    CHECK(loaded.rows[i].final_loss == res.rows[i].final_loss);
    CHECK(loaded.rows[i].tau1 == res.rows[i].tau1);
    CHECK(loaded.rows[i].tau2 == res.rows[i].tau2);
    CHECK(loaded.rows[i].status == res.rows[i].status);
  }
  REQUIRE(loaded.aggregates.size() == res.aggregates.size());
  for (std::size_t i = 0; i < res.aggregates.size(); ++i) {
    CHECK(loaded.aggregates[i].d_s_mean == res.aggregates[i].d_s_mean);
    CHECK(loaded.aggregates[i].d_s_std == res.aggregates[i].d_s_std);
  }

  auto again = dir.file("out2.csv");
  emit_csv(run_sweep(cfg), again);
  CHECK(testutil::read_file(again) == text);

  std::string meta = testutil::read_file(dir.file("out.csv.meta.json"));
  nlohmann::json j = nlohmann::json::parse(meta);
  CHECK(j.contains("created_utc"));
  CHECK(j["model_id"] == res.model_id);
  CHECK(j["master_seed"] == 5);
  CHECK(j["rows"] == res.rows.size());
  CHECK(j.contains("total_wall_seconds"));
  CHECK(j["wall_seconds"].size() == res.rows.size());
}

TEST_CASE("load_sweep_csv rejects tampered aggregates, bad headers, and short rows") {
  testutil::TempDir dir;
  ExperimentConfig cfg = small_config();
  cfg.m_grid = {40};
  cfg.trials = 2;
  cfg.solvers.resize(1);
  SweepResult res = run_sweep(cfg);
  auto path = dir.file("base.csv");
  emit_csv(res, path);
  std::string text = testutil::read_file(path);

  // corrupt the d_s mean of the aggregate row
  std::istringstream lines(text);
  std::string line;
  std::string tampered;
  while (std::getline(lines, line)) {
    if (line.rfind("agg,", 0) == 0) {
      std::vector<std::string> f;
      std::string cell;
      std::istringstream cells(line);
      while (std::getline(cells, cell, ',')) f.push_back(cell);
      f[4] = f[4] == "0.125" ? "0.25" : "0.125";
      line = f[0];
      for (std::size_t i = 1; i < f.size(); ++i) line += "," + f[i];
    }
    tampered += line + "\n";
  }
  write_text(dir.file("tampered.csv"), tampered);
  CHECK_THROWS_AS(load_sweep_csv(dir.file("tampered.csv")), std::runtime_error);

  write_text(dir.file("badheader.csv"), "not,a,header\n");
  CHECK_THROWS_AS(load_sweep_csv(dir.file("badheader.csv")), std::runtime_error);

  std::string truncated = text;
  truncated = truncated.substr(0, truncated.rfind(','));  // drop the last field
  write_text(dir.file("short.csv"), truncated + "\n");
  CHECK_THROWS_AS(load_sweep_csv(dir.file("short.csv")), std::runtime_error);

  CHECK_THROWS_AS(load_sweep_csv(dir.file("absent.csv")), std::runtime_error);
}

TEST_CASE("diverged rows round-trip through the nan spelling") {
  testutil::TempDir dir;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SweepRow ok;
  ok.m = 10;
  ok.solver = "s";
  ok.trial = 0;
  ok.d_s = 0.5;
  ok.l2_per_coord = 0.1;
  SweepRow bad = ok;
  bad.trial = 1;
  bad.d_s = nan;
  bad.l2_per_coord = nan;
  bad.final_loss = nan;
  bad.tau2 = nan;
  bad.status = "diverged";
  SweepResult res;
  res.rows = {ok, bad};
  res.aggregates = compute_aggregates(res.rows);
  res.model_id = "hand";
  res.master_seed = 1;
  res.wall_seconds = {0.0, 0.0};

  auto path = dir.file("nan.csv");
  emit_csv(res, path);
  CHECK(testutil::read_file(path).find("nan") != std::string::npos);
  SweepResult loaded = load_sweep_csv(path);
  REQUIRE(loaded.rows.size() == 2);
  CHECK(loaded.rows[1].status == "diverged");
  CHECK(std::isnan(loaded.rows[1].d_s));
  CHECK(loaded.rows[0].d_s == 0.5);
}

TEST_CASE("vector text files round-trip and validate") {
  testutil::TempDir dir;
  Eigen::VectorXd v = Rng(73).gaussian_vector(9);
  auto path = dir.file("v.txt");
  save_vector_text(v, path);
  Eigen::VectorXd back = load_vector_text(path);
  CHECK(back == v);

  write_text(dir.file("empty.txt"), "");
  CHECK_THROWS_AS(load_vector_text(dir.file("empty.txt")), std::runtime_error);
  CHECK_THROWS_AS(load_vector_text(dir.file("absent.txt")), std::runtime_error);
  write_text(dir.file("junk.txt"), "1.0 oops 2.0\n");
  CHECK_THROWS_AS(load_vector_text(dir.file("junk.txt")), std::runtime_error);
}

TEST_CASE("network-backed sweeps run end to end from a config file") {
  testutil::TempDir dir;
  FeedForwardModel net = positive_tanh_net();
  net.save(dir.file("net.json"));
  write_text(dir.file("exp.toml"),
             "m_grid = [60]\n"
             "trials = 2\n"
             "master_seed = 3\n"
             "[model]\n"
             "kind = \"ffnet:net.json\"\n"
             "r_min = 0.3\n"
             "[[solvers]]\n"
             "name = \"pgd1bit\"\n"
             "step_size = 0.02\n"
             "outer_iters = 5\n"
             "restarts = 2\n"
             "inner_steps = 80\n");
  ExperimentConfig cfg = ExperimentConfig::from_file(dir.file("exp.toml"));
  CHECK(cfg.model.kind.find(dir.file("net.json").string()) != std::string::npos);
  cfg.validate();
  SweepResult res = run_sweep(cfg);
  CHECK(res.rows.size() == 2);
  for (const SweepRow& r : res.rows) {
    CHECK(r.status == "ok");
    CHECK(r.d_s >= 0.0);
    CHECK(r.d_s <= 1.0);
  }
  CHECK(res.model_id.find("normalized") != std::string::npos);
}
