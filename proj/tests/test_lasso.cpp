#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "onebit/errors.hpp"
#include "onebit/lasso.hpp"

using namespace onebit;
using testutil::make_ensemble;
using testutil::make_vector;

namespace {

// Smallest l1 norm over all basic feasible solutions of the standard-form LP
//   rows i < m:  b_i a_i^T (x+ - x-) - s_i = 0
//   row m:       sum_i b_i a_i^T (x+ - x-) = m
// with x+, x-, s >= 0. Enumerating every basis is exact for these sizes.
double l1_min_by_vertex_enumeration(const MeasurementEnsemble& a, const SignPattern& b) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  const Eigen::Index cols = 2 * n + m;
  const Eigen::Index rows = m + 1;

  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index i = 0; i < m; ++i) {
    full.row(i).head(n) = b[i] * a.entries().row(i);
    full.row(i).segment(n, n) = -b[i] * a.entries().row(i);
    full(i, 2 * n + i) = -1.0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    double col_sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) col_sum += b[i] * a.entries()(i, j);
    full(m, j) = col_sum;
    full(m, n + j) = -col_sum;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
  rhs[m] = static_cast<double>(m);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  cost.head(2 * n).setOnes();

  double best = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> pick(static_cast<std::size_t>(rows));
  std::function<void(Eigen::Index, Eigen::Index)> recurse = [&](Eigen::Index start,
                                                                Eigen::Index depth) {
    if (depth == rows) {
      Eigen::MatrixXd basis(rows, rows);
      for (Eigen::Index j = 0; j < rows; ++j) basis.col(j) = full.col(pick[static_cast<std::size_t>(j)]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
      if (!lu.isInvertible()) return;
      Eigen::VectorXd xb = lu.solve(rhs);
      if ((xb.array() < -1e-9).any()) return;
      double obj = 0.0;
      for (Eigen::Index j = 0; j < rows; ++j) obj += cost[pick[static_cast<std::size_t>(j)]] * xb[j];
      best = std::min(best, obj);
      return;
    }
    for (Eigen::Index c = start; c < cols; ++c) {
      pick[static_cast<std::size_t>(depth)] = c;
      recurse(c + 1, depth + 1);
    }
  };
  recurse(0, 0);
  return best;
}

struct PlantedInstance {
  MeasurementEnsemble a;
  SignPattern b;
  Eigen::VectorXd x_star;
};

PlantedInstance planted(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  MeasurementEnsemble a = gaussian_matrix(m, n, seed);
  Eigen::VectorXd x = Rng(derive_seed(seed, 1)).gaussian_vector(n).normalized();
  return PlantedInstance{a, sign_measure(a, x), x};
}

}  // namespace

TEST_CASE("lasso_linear with reg 0 solves square invertible systems") {
  MeasurementEnsemble a = gaussian_matrix(6, 6, 101);
  Eigen::VectorXd y = Rng(102).gaussian_vector(6);
  Eigen::VectorXd expect = a.entries().fullPivLu().solve(y);
  LassoInfo info;
  Eigen::VectorXd x = lasso_linear(a, y, 0.0, &info);
  CHECK((x - expect).norm() <= 1e-6);
  CHECK(info.converged);
  CHECK(info.iterations >= 1);
}

TEST_CASE("lasso_linear on the identity soft-thresholds the target") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(5, 5);
  MeasurementEnsemble a(eye, 0);
  Eigen::VectorXd y = make_vector({1.0, -0.3, 0.05, 0.0, 2.0});
  const double reg = 0.1;
  Eigen::VectorXd x = lasso_linear(a, y, reg);
  for (Eigen::Index i = 0; i < 5; ++i) {
    double soft = std::copysign(std::max(0.0, std::abs(y[i]) - reg), y[i]);
    CHECK(std::abs(x[i] - soft) <= 1e-7);
  }
}

TEST_CASE("lasso_linear recovers planted sparse signals from linear measurements") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(30);
  Rng rng(103);
  x[4] = 1.0 + rng.uniform();
  x[11] = -(1.0 + rng.uniform());
  x[27] = 1.0 + rng.uniform();
  MeasurementEnsemble a = gaussian_matrix(60, 30, 104);
  Eigen::VectorXd y = a.entries() * x;
  LassoInfo info;
  Eigen::VectorXd est = lasso_linear(a, y, 1e-4, &info);
  CHECK((est - x).norm() <= 1e-2);
  for (Eigen::Index i = 0; i < 30; ++i) {
    if (i == 4 || i == 11 || i == 27) continue;
    CHECK(std::abs(est[i]) <= 1e-2);
  }
  CHECK(std::abs(info.residual_norm - (a.entries() * est - y).norm()) <= 1e-12);
  double obj = 0.5 * (a.entries() * est - y).squaredNorm() + 1e-4 * est.lpNorm<1>();
  CHECK(std::abs(info.objective - obj) <= 1e-12);
}

TEST_CASE("lasso_linear validates arguments") {
  MeasurementEnsemble a = gaussian_matrix(4, 3, 105);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(lasso_linear(a, y, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(lasso_linear(a, Eigen::VectorXd::Zero(3), 0.1), std::invalid_argument);
}

TEST_CASE("lasso_1bit solves the single-measurement program by hand") {
  MeasurementEnsemble a = make_ensemble({{1, 0}});
  SignPattern b(std::vector<std::int8_t>{1});
  // feasible set: x1 >= 0 and x1 = 1, so the min l1 point is (1, 0)
  Eigen::VectorXd x = lasso_1bit(a, b);
  CHECK((x - make_vector({1, 0})).norm() <= 1e-9);
}

TEST_CASE("lasso_1bit solutions satisfy both constraint families") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    PlantedInstance inst = planted(20, 8, derive_seed(900, seed));
    Eigen::VectorXd x = lasso_1bit(inst.a, inst.b);
    Eigen::VectorXd ax = inst.a.entries() * x;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < 20; ++i) {
      CHECK(inst.b[i] * ax[i] >= -1e-7);
      sum += inst.b[i] * ax[i];
    }
    CHECK(std::abs(sum - 20.0) <= 1e-5);
    CHECK(std::abs(ax.lpNorm<1>() - 20.0) <= 1e-4);
  }
}

TEST_CASE("lasso_1bit attains the vertex-enumeration optimum") {
  struct Shape {
    Eigen::Index m, n;
  };
  const Shape shapes[] = {{5, 4}, {6, 4}, {7, 4}, {5, 5}, {6, 5}, {7, 5}};
  int checked = 0;
  for (const Shape& sh : shapes) {
    for (std::uint64_t rep = 0; rep < 2; ++rep) {
      PlantedInstance inst = planted(sh.m, sh.n, derive_seed(910 + rep, static_cast<std::uint64_t>(sh.m * 16 + sh.n)));
      double brute = l1_min_by_vertex_enumeration(inst.a, inst.b);
      REQUIRE(std::isfinite(brute));
      Eigen::VectorXd x = lasso_1bit(inst.a, inst.b);
      CHECK(std::abs(x.lpNorm<1>() - brute) <= 1e-6);
      ++checked;
    }
  }
  CHECK(checked == 12);
}

TEST_CASE("lasso_1bit never exceeds the scaled-plant feasible objective") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    PlantedInstance inst = planted(40, 10, derive_seed(920, seed));
    Eigen::VectorXd ax = inst.a.entries() * inst.x_star;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < 40; ++i) sum += inst.b[i] * ax[i];
    Eigen::VectorXd feasible = (40.0 / sum) * inst.x_star;
    Eigen::VectorXd x = lasso_1bit(inst.a, inst.b);
    CHECK(x.lpNorm<1>() <= feasible.lpNorm<1>() + 1e-6);
  }
}

TEST_CASE("lasso_1bit reports contradictory sign constraints") {
  MeasurementEnsemble a = make_ensemble({{1, 2}, {-1, -2}});
  SignPattern b(std::vector<std::int8_t>{1, 1});
  CHECK_THROWS_AS(lasso_1bit(a, b), InfeasibleError);
}

TEST_CASE("random over-constrained sign patterns are infeasible and the relaxation still solves") {
  MeasurementEnsemble a = gaussian_matrix(30, 4, 930);
  Rng rng(931);
  std::vector<std::int8_t> signs(30);
  for (auto& s : signs) s = rng.uniform() < 0.5 ? -1 : 1;
  SignPattern b(signs);
  CHECK_THROWS_AS(lasso_1bit(a, b), InfeasibleError);

  Eigen::VectorXd x = lasso_1bit_relaxed(a, b);
  Eigen::VectorXd ax = a.entries() * x;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < 30; ++i) sum += b[i] * ax[i];
  CHECK(std::abs(sum - 30.0) <= 1e-5);
}

TEST_CASE("the relaxation agrees with the exact program whenever it is feasible") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    PlantedInstance inst = planted(25, 6, derive_seed(940, seed));
    Eigen::VectorXd exact = lasso_1bit(inst.a, inst.b);
    Eigen::VectorXd relaxed = lasso_1bit_relaxed(inst.a, inst.b);
    CHECK(std::abs(relaxed.lpNorm<1>() - exact.lpNorm<1>()) <= 1e-6);
    Eigen::VectorXd ax = inst.a.entries() * relaxed;
    for (Eigen::Index i = 0; i < 25; ++i) CHECK(inst.b[i] * ax[i] >= -1e-6);
  }
}

TEST_CASE("lasso_1bit handles a moderate regression size") {
  PlantedInstance inst = planted(200, 30, 950);
  Eigen::VectorXd x = lasso_1bit(inst.a, inst.b);
  Eigen::VectorXd ax = inst.a.entries() * x;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < 200; ++i) {
    CHECK(inst.b[i] * ax[i] >= -1e-7);
    sum += inst.b[i] * ax[i];
  }
  CHECK(std::abs(sum - 200.0) <= 1e-4);
}

TEST_CASE("lasso argument validation") {
  MeasurementEnsemble a = gaussian_matrix(5, 3, 960);
  SignPattern wrong(std::vector<std::int8_t>(4, 1));
  CHECK_THROWS_AS(lasso_1bit(a, wrong), std::invalid_argument);
  SignPattern b(std::vector<std::int8_t>(5, 1));
  CHECK_THROWS_AS(lasso_1bit_relaxed(a, b, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lasso_1bit_relaxed(a, b, -3.0), std::invalid_argument);
}
