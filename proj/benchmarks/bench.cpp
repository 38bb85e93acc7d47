#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "onebit/genmodel.hpp"
#include "onebit/lasso.hpp"
#include "onebit/measure.hpp"
#include "onebit/recover.hpp"
#include "onebit/rng.hpp"

using namespace onebit;

namespace {

void bm_gaussian_matrix(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    MeasurementEnsemble a = gaussian_matrix(m, 64, seed++);
    benchmark::DoNotOptimize(a.entries().data());
  }
}
BENCHMARK(bm_gaussian_matrix)->Arg(500)->Arg(4000);

void bm_sign_measure(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  MeasurementEnsemble a = gaussian_matrix(m, 64, 7);
  Eigen::VectorXd x = Rng(8).gaussian_vector(64).normalized();
  for (auto _ : state) {
    SignPattern b = sign_measure(a, x);
    benchmark::DoNotOptimize(b.bits().data());
  }
}
BENCHMARK(bm_sign_measure)->Arg(500)->Arg(4000);

void bm_group_sparse_forward(benchmark::State& state) {
  GroupSparseModel model = GroupSparseModel::with_default_amplitudes(256, 4);
  Rng rng(9);
  Eigen::VectorXd z = rng.uniform_ball(4, 1.0);
  for (auto _ : state) {
    Eigen::VectorXd x = model.forward(z);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(bm_group_sparse_forward);

void bm_group_sparse_project(benchmark::State& state) {
  GroupSparseModel model = GroupSparseModel::with_default_amplitudes(256, 4);
  Eigen::VectorXd y = Rng(10).gaussian_vector(256);
  for (auto _ : state) {
    Eigen::VectorXd p = model.exact_project(y);
    benchmark::DoNotOptimize(p.data());
  }
}
BENCHMARK(bm_group_sparse_project);

void bm_pgd_1bit(benchmark::State& state) {
  GroupSparseModel model = GroupSparseModel::with_default_amplitudes(60, 3);
  MeasurementEnsemble a = gaussian_matrix(state.range(0), 60, 11);
  Eigen::VectorXd x = model.forward(Rng(12).uniform_ball(3, 1.0));
  SignPattern b = sign_measure(a, x);
  RecoveryConfig cfg;
  cfg.step_size = 0.002;
  cfg.outer_iters = 30;
  for (auto _ : state) {
    RecoveryResult r = pgd_1bit(a, b, model, cfg);
    benchmark::DoNotOptimize(r.estimate.data());
  }
}
BENCHMARK(bm_pgd_1bit)->Arg(200)->Arg(800);

void bm_biht(benchmark::State& state) {
  MeasurementEnsemble a = gaussian_matrix(state.range(0), 60, 13);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(60);
  x[3] = 0.8;
  x[17] = -0.5;
  x[44] = 0.33;
  x.normalize();
  SignPattern b = sign_measure(a, x);
  for (auto _ : state) {
    Eigen::VectorXd est = biht(a, b, 3, 1.0, 100);
    benchmark::DoNotOptimize(est.data());
  }
}
BENCHMARK(bm_biht)->Arg(200)->Arg(800);

void bm_lasso_linear(benchmark::State& state) {
  MeasurementEnsemble a = gaussian_matrix(120, 40, 14);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(40);
  x[2] = 1.0;
  x[19] = -0.7;
  Eigen::VectorXd y = a.entries() * x;
  for (auto _ : state) {
    Eigen::VectorXd est = lasso_linear(a, y, 1e-4);
    benchmark::DoNotOptimize(est.data());
  }
}
BENCHMARK(bm_lasso_linear);

void bm_lasso_1bit(benchmark::State& state) {
  MeasurementEnsemble a = gaussian_matrix(40, 12, 15);
  Eigen::VectorXd x = Rng(16).gaussian_vector(12).normalized();
  SignPattern b = sign_measure(a, x);
  for (auto _ : state) {
    Eigen::VectorXd est = lasso_1bit(a, b);
    benchmark::DoNotOptimize(est.data());
  }
}
BENCHMARK(bm_lasso_1bit);

}  // namespace

BENCHMARK_MAIN();
