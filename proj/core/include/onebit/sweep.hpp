#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "onebit/config.hpp"
#include "onebit/genmodel.hpp"
#include "onebit/measure.hpp"
#include "onebit/recover.hpp"

namespace onebit {

// Which decoder an experiment plants signals in. kind is "group-sparse" or
// "ffnet:<manifest path>"; n/k/r/x_max/x_c parametrize the former (x_max = 0
// picks the default amplitudes), r_min > 0 wraps a loaded net in the
// unit-sphere normalizer.
struct ModelSpec {
  std::string kind = "group-sparse";
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  double r = 1.0;
  double x_max = 0.0;
  double x_c = 1.0;
  double r_min = 0.0;

  std::shared_ptr<const GenerativeModel> make_model() const;
};

// One solver column of the sweep. `name` picks the algorithm (pgd1bit, biht,
// lasso, lasso1bit); `label` names its CSV rows (defaults to name). Only the
// fields the named algorithm reads are configurable for it.
struct SolverSpec {
  std::string name;
  std::string label;
  RecoveryConfig recovery;  // pgd1bit
  int sparsity = 3;         // biht
  double biht_step = 1.0;
  int biht_iters = 100;
  double reg = 1e-4;        // lasso
};

struct ExperimentConfig {
  ModelSpec model;
  std::vector<Eigen::Index> m_grid;
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> latent_seeds;  // optional; trial t uses [t % size]
  std::string sampling = "ball";            // "ball" or "blocks" (dense-in-block cube)
  NoiseSpec noise;
  std::vector<SolverSpec> solvers;
  std::string out_path = "sweep.csv";

  // Parses the TOML-subset file (grammar in config.hpp; schema in the
  // README). Relative ffnet manifest paths resolve against the config file's
  // directory. Unknown keys anywhere are ConfigErrors.
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_doc(const ConfigDoc& doc, const std::filesystem::path& base_dir);

  void validate() const;
};

// One (m, solver, trial) measurement. Planted signals are normalized before
// measurement (their scale is invisible to sign readings), so d_s and
// l2_per_coord compare unit directions: l2_per_coord * n is the chord
// |x - x_hat|_2 and the geodesic sandwich ties the two columns together.
// status: "ok", "diverged" (solver failed or returned garbage; metric
// columns are nan), or "relaxed" (lasso1bit fell back to its hinge form).
struct SweepRow {
  Eigen::Index m = 0;
  std::string solver;
  int trial = 0;
  double d_s = 0.0;
  double l2_per_coord = 0.0;
  double final_loss = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  std::string status = "ok";
};

// Per-cell aggregate over the non-diverged rows; errbar columns are half a
// standard deviation (the plotting convention downstream).
struct SweepAggregate {
  Eigen::Index m = 0;
  std::string solver;
  int count = 0;
  double d_s_mean = 0.0;
  double d_s_std = 0.0;
  double d_s_errbar = 0.0;
  double l2_mean = 0.0;
  double l2_std = 0.0;
  double l2_errbar = 0.0;
  double final_loss_mean = 0.0;
  double tau1_mean = 0.0;
  double tau2_mean = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // canonical order: (m, solver, trial)
  std::vector<SweepAggregate> aggregates;
  std::string model_id;
  std::uint64_t master_seed = 0;
  std::vector<double> wall_seconds;  // parallel to rows; sidecar only
  double total_wall_seconds = 0.0;
};

// Mean/std (sample, zero for singletons) per (m, solver) cell over rows with
// status != "diverged", in canonical order. Deterministic in row order.
std::vector<SweepAggregate> compute_aggregates(const std::vector<SweepRow>& rows);

// Runs the full grid serially: for each m and trial, draws A from seeds
// derived from (master_seed, m, trial), plants x from the trial's latent
// stream, corrupts the measurements once, and runs every solver on the same
// instance. Deterministic: identical config gives identical rows.
SweepResult run_sweep(const ExperimentConfig& config);

// Writes the rows and aggregate rows as CSV (17-significant-digit floats,
// canonical order, byte-stable across reruns) plus a <path>.meta.json
// sidecar holding timestamps and wall times, which are excluded from the
// determinism contract. Columns:
//   row,m,solver,trial,d_s,l2_per_coord,final_loss,tau1,tau2,status,
//   d_s_std,d_s_errbar,l2_std,l2_errbar
// "trial" rows leave the std/errbar cells empty; "agg" rows put the cell
// count in the trial column and the per-cell means in the metric columns.
void emit_csv(const SweepResult& result, const std::filesystem::path& path);

// Reads emit_csv output back, recomputes every aggregate from the trial rows
// and requires bit-identical agreement with the aggregate rows on file.
SweepResult load_sweep_csv(const std::filesystem::path& path);

// Whitespace-separated numeric vector files used by the CLI.
Eigen::VectorXd load_vector_text(const std::filesystem::path& path);
void save_vector_text(const Eigen::VectorXd& v, const std::filesystem::path& path);

}  // namespace onebit
