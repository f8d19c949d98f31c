// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "got.hpp"
#include "gradient_cases.hpp"
#include "helpers.hpp"
#include "losses.hpp"
#include "oracles.hpp"

using namespace bg;
using diff::Tape;
using diff::Var;
using gradcases::random_matrix;
using testing_helpers::to_grid;

namespace {

Matrix unit_rows(Matrix m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
  return m;
}

/// Row-renormalized probabilities of a log plan, by loops.
oracle::Grid row_probs(const Matrix& log_plan) {
  oracle::Grid p = to_grid(log_plan);
  for (auto& row : p) {
    const double l = oracle::logsumexp(row);
    for (double& v : row) v = std::exp(v - l);
  }
  return p;
}

std::vector<hiergraph::ShapeEdge> five_node_edges() {
  return {{0, 1, 0.0}, {0, 2, 0.0}, {1, 2, 0.0}, {2, 3, 0.0}};  // node 4 isolated
}

}  // namespace

TEST_CASE("triplet loss clamps when negatives are far enough") {
  Tape t;
  const Matrix a = Matrix::Identity(3, 3);
  const Matrix n = -a;  // distance 2 from each anchor
  CHECK(losses::triplet_loss(t.constant(a), t.constant(a), t.constant(n), 0.2).item() == 0.0);
}

TEST_CASE("triplet loss of identical triplets is the margin") {
  diff::Rng rng(1);
  Tape t;
  const Matrix a = unit_rows(random_matrix(5, 4, rng));
  CHECK(losses::triplet_loss(t.constant(a), t.constant(a), t.constant(a), 0.2).item() == doctest::Approx(0.2));
}

TEST_CASE("triplet loss matches direct arithmetic") {
  diff::Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = unit_rows(random_matrix(5, 4, rng)), p = unit_rows(random_matrix(5, 4, rng)),
                 n = unit_rows(random_matrix(5, 4, rng));
    double s = 0.0;
    for (int i = 0; i < 5; ++i) {
      double dp = 0.0, dn = 0.0;
      for (int k = 0; k < 4; ++k) {
        dp += (a(i, k) - p(i, k)) * (a(i, k) - p(i, k));
        dn += (a(i, k) - n(i, k)) * (a(i, k) - n(i, k));
      }
      s += std::sqrt(dp) - std::sqrt(dn);
    }
    Tape t;
    const double loss = losses::triplet_loss(t.constant(a), t.constant(p), t.constant(n), 0.2).item();
    CHECK(loss == doctest::Approx(std::max(s + 0.2, 0.0)).epsilon(1e-13));
    CHECK(loss >= 0.0);
  }
  Tape t;
  CHECK_THROWS_AS(losses::triplet_loss(t.constant(Matrix::Zero(2, 3)), t.constant(Matrix::Zero(3, 3)),
                                       t.constant(Matrix::Zero(2, 3)), 0.2),
                  bg::Error);
}

TEST_CASE("soft weights at zero, at the radius and on a hand matrix") {
  const Matrix m = (Matrix(3, 3) << 0.0, 0.5, 0.1, 0.25, 0.7, 0.49, 0.6, 0.0, 0.375).finished();
  const Matrix w = losses::soft_weight_matrix(m, 0.5);
  const Matrix expected = (Matrix(3, 3) << 1.0, 0.0, 0.8, 0.5, 0.0, 0.02, 0.0, 1.0, 0.25).finished();
  CHECK((w - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(w(0, 0) == 1.0);
  CHECK(w(2, 1) == 1.0);
  CHECK_THROWS_AS(losses::soft_weight_matrix(m, 0.0), bg::Error);
}

TEST_CASE("matching loss limits") {
  Tape t;
  const Matrix uniform = Matrix::Constant(4, 4, std::log(1.0 / 16.0));
  const Matrix eye = Matrix::Identity(4, 4);
  CHECK(losses::matching_loss(t.constant(uniform), eye).item() == doctest::Approx(4.0 * std::log(4.0)));
  Tape t2;
  const Matrix peaked = got::sinkhorn(t2.constant(30.0 * eye), 100, 1.0).value();
  CHECK(losses::matching_loss(t2.constant(peaked), eye).item() < 1e-10);
}

TEST_CASE("matching loss matches a double-loop oracle") {
  diff::Rng rng(3);
  const Matrix lp = random_matrix(3, 3, rng, -3, 0);
  const Matrix w = random_matrix(3, 3, rng, -0.5, 1.0).cwiseMax(0.0);
  const auto p = row_probs(lp);
  double expected = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l)
      if (w(i, l) > 0) expected -= w(i, l) * std::log(p[i][l]);
  Tape t;
  CHECK(losses::matching_loss(t.constant(lp), w).item() == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("matching loss prefers mass on the weighted entries") {
  // One positive entry per row: any row-stochastic plan scores worse than the
  // plan that concentrates each row on it.
  diff::Rng rng(4);
  Matrix w = Matrix::Zero(3, 3);
  w(0, 2) = 0.7;
  w(1, 0) = 1.0;
  w(2, 2) = 0.3;
  Matrix best = Matrix::Constant(3, 3, -40.0);
  best(0, 2) = best(1, 0) = best(2, 2) = 0.0;
  Tape t;
  const double optimum = losses::matching_loss(t.constant(best), w).item();
  CHECK(optimum < 1e-12);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix lp = random_matrix(3, 3, rng, -5, 0);
    CHECK(losses::matching_loss(t.constant(lp), w).item() > optimum);
  }
}

TEST_CASE("softpool positions") {
  diff::Rng rng(5);
  const Matrix targets = random_matrix(4, 3, rng);
  Tape t;
  const Matrix peaked = got::sinkhorn(t.constant(40.0 * Matrix::Identity(4, 4)), 100, 1.0).value();
  CHECK((losses::softpool_positions(t.constant(peaked), targets).value() - targets).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix uniform = Matrix::Constant(4, 4, -1.0);
  const Matrix centroid = targets.colwise().mean();
  const Matrix u = losses::softpool_positions(t.constant(uniform), targets).value();
  for (int i = 0; i < 4; ++i) CHECK((u.row(i) - centroid).cwiseAbs().maxCoeff() < 1e-15);

  const Matrix lp = random_matrix(4, 4, rng, -3, 0);
  const auto p = row_probs(lp);
  const Matrix s = losses::softpool_positions(t.constant(lp), targets).value();
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 3; ++k) {
      double expected = 0.0;
      for (int l = 0; l < 4; ++l) expected += p[i][l] * targets(l, k);
      CHECK(s(i, k) == doctest::Approx(expected).epsilon(1e-13));
      // Barycenters stay inside the bounding box of the targets.
      CHECK(s(i, k) >= targets.col(k).minCoeff() - 1e-15);
      CHECK(s(i, k) <= targets.col(k).maxCoeff() + 1e-15);
    }
}

TEST_CASE("laplace operator sums incident edge lengths") {
  const Matrix two = (Matrix(2, 3) << 0, 0, 0, 1, 0, 0).finished();
  const std::vector<hiergraph::ShapeEdge> one_edge{{0, 1, 0.0}};
  CHECK(losses::laplace_operator(two, one_edge) == Matrix::Ones(2, 1));

  diff::Rng rng(6);
  const Matrix pos = random_matrix(5, 3, rng);
  const auto edges = five_node_edges();
  const Matrix lap = losses::laplace_operator(pos, edges);
  std::vector<double> expected(5, 0.0);
  for (const auto& e : edges) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) d += (pos(e.a, k) - pos(e.b, k)) * (pos(e.a, k) - pos(e.b, k));
    expected[e.a] += std::sqrt(d);
    expected[e.b] += std::sqrt(d);
  }
  for (int i = 0; i < 5; ++i) CHECK(lap(i, 0) == doctest::Approx(expected[i]).epsilon(1e-14));
  CHECK(lap(4, 0) == 0.0);
}

TEST_CASE("regularization loss") {
  diff::Rng rng(7);
  const Matrix source = random_matrix(5, 3, rng);
  const auto edges = five_node_edges();
  Tape t;
  CHECK(losses::regularization_loss(t.constant(source), source, edges).item() == 0.0);
  const double doubled = losses::regularization_loss(t.constant(2.0 * source), source, edges).item();
  CHECK(doubled == doctest::Approx(losses::laplace_operator(source, edges).sum()).epsilon(1e-13));

  const Matrix moved = source + random_matrix(5, 3, rng, -0.1, 0.1);
  const Matrix la = losses::laplace_operator(moved, edges), lb = losses::laplace_operator(source, edges);
  const double expected = (la - lb).cwiseAbs().sum();
  const double got = losses::regularization_loss(t.constant(moved), source, edges).item();
  CHECK(got == doctest::Approx(expected).epsilon(1e-13));
  CHECK(got >= 0.0);
}

TEST_CASE("total loss follows the schedule") {
  const auto schedule = losses::LossSchedule::standard();
  Tape t;
  Var ld = t.constant(Matrix::Constant(1, 1, 2.0));
  Var lm = t.constant(Matrix::Constant(1, 1, 3.0));
  Var lr = t.constant(Matrix::Constant(1, 1, 5.0));
  CHECK(losses::total_loss(ld, lm, lr, schedule, 5).item() == doctest::Approx(2.0 + 5.0));
  CHECK(losses::total_loss(ld, lm, lr, schedule, 30).item() == doctest::Approx(2.0 + 5.0));
  CHECK(losses::total_loss(ld, lm, lr, schedule, 40).item() == doctest::Approx(0.2 + 3.0 + 5.0));
  CHECK(losses::total_loss(ld, lm, lr, schedule, 1000).item() == doctest::Approx(0.2 + 3.0 + 5.0));
  Var zero = t.constant(Matrix::Zero(1, 1));
  CHECK(losses::total_loss(zero, zero, zero, schedule, 40).item() == 0.0);
  for (int epoch = 1; epoch <= 60; ++epoch) {
    const auto& w = schedule.at(epoch);
    if (epoch <= 30) {
      CHECK(w.descriptor == 1.0);
      CHECK(w.matching == 0.0);
      CHECK(w.regularization == 1.0);
    } else {
      CHECK(w.descriptor == 0.1);
      CHECK(w.matching == 1.0);
      CHECK(w.regularization == 1.0);
    }
  }
  CHECK_THROWS_AS(losses::LossSchedule(std::vector<losses::LossSchedule::Stage>{{5, {1, 0, 1}}, {3, {1, 1, 1}}}), bg::Error);
  CHECK_THROWS_AS(losses::LossSchedule(std::vector<losses::LossSchedule::Stage>{{5, {-1, 0, 1}}}), bg::Error);
}

TEST_CASE("loss gradients pass the finite-difference check") {
  for (const auto& c : gradcases::module_cases()) {
    if (c.name != "triplet loss" && c.name != "matching loss" && c.name != "softpool positions" &&
        c.name != "laplace operator" && c.name != "regularization loss" && c.name != "full graph N=4 d=6") {
      continue;
    }
    const auto report = c.run();
    INFO(c.name << " worst " << report.worst_parameter << "[" << report.worst_index << "]");
    CHECK(report.max_rel_error < 1e-4);
  }
}
