// SPDX-License-Identifier: Apache-2.0
#include "losses.hpp"

#include <cmath>

#include "error.hpp"

namespace bg::losses {

using diff::Var;

Var triplet_loss(Var anchors, Var positives, Var negatives, double margin) {
  if (anchors.rows() != positives.rows() || anchors.rows() != negatives.rows()) {
    fail(ErrorCode::ShapeMismatch, "triplet batches differ in size");
  }
  Var pos = diff::row_norms(diff::sub(anchors, positives));
  Var neg = diff::row_norms(diff::sub(anchors, negatives));
  return diff::relu(diff::add_scalar(diff::sum(diff::sub(pos, neg)), margin));
}

Matrix soft_weight_matrix(const Matrix& geodesics, double r_d) {
  if (!(r_d > 0.0)) fail(ErrorCode::InvalidArgument, "r_d must be positive");
  return geodesics.unaryExpr([r_d](double m) { return m <= r_d ? (r_d - m) / r_d : 0.0; });
}

Var matching_loss(Var log_plan, const Matrix& weights) {
  if (log_plan.rows() != weights.rows() || log_plan.cols() != weights.cols()) {
    fail(ErrorCode::ShapeMismatch, "matching weights and plan differ in shape");
  }
  Var log_rows = diff::log_normalize_rows(log_plan, 0.0);
  return diff::scale(diff::sum(diff::mul(log_plan.tape().constant(weights), log_rows)), -1.0);
}

Var softpool_positions(Var log_plan, const Matrix& target_positions) {
  if (target_positions.rows() != log_plan.cols()) {
    fail(ErrorCode::ShapeMismatch, "one target position per plan column required");
  }
  Var probs = diff::exp(diff::log_normalize_rows(log_plan, 0.0));
  return diff::matmul(probs, log_plan.tape().constant(target_positions));
}

namespace {

void check_edges(Eigen::Index n, std::span<const hiergraph::ShapeEdge> edges) {
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n) {
      fail(ErrorCode::InvalidArgument, "shape edge endpoint out of range");
    }
  }
}

}  // namespace

Var laplace_operator(Var positions, std::span<const hiergraph::ShapeEdge> edges) {
  const Eigen::Index n = positions.rows();
  check_edges(n, edges);
  diff::Tape& tape = positions.tape();
  if (edges.empty()) return tape.constant(Matrix::Zero(n, 1));
  std::vector<int> from, to;
  Matrix incidence = Matrix::Zero(n, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t k = 0; k < edges.size(); ++k) {
    from.push_back(edges[k].a);
    to.push_back(edges[k].b);
    incidence(edges[k].a, static_cast<Eigen::Index>(k)) = 1.0;
    incidence(edges[k].b, static_cast<Eigen::Index>(k)) = 1.0;
  }
  Var lengths = diff::row_norms(
      diff::sub(diff::gather_rows(positions, from), diff::gather_rows(positions, to)));
  return diff::matmul(tape.constant(std::move(incidence)), lengths);
}

Matrix laplace_operator(const Matrix& positions, std::span<const hiergraph::ShapeEdge> edges) {
  check_edges(positions.rows(), edges);
  Matrix out = Matrix::Zero(positions.rows(), 1);
  for (const auto& e : edges) {
    const double len = (positions.row(e.a) - positions.row(e.b)).norm();
    out(e.a, 0) += len;
    out(e.b, 0) += len;
  }
  return out;
}

Var regularization_loss(Var predicted, const Matrix& source,
                        std::span<const hiergraph::ShapeEdge> edges) {
  if (predicted.rows() != source.rows() || predicted.cols() != source.cols()) {
    fail(ErrorCode::ShapeMismatch, "predicted and source positions differ in shape");
  }
  Var target = predicted.tape().constant(laplace_operator(source, edges));
  return diff::sum(diff::abs(diff::sub(laplace_operator(predicted, edges), target)));
}

LossSchedule::LossSchedule(std::vector<Stage> stages) : stages_(std::move(stages)) {
  if (stages_.empty()) fail(ErrorCode::InvalidArgument, "loss schedule needs a stage");
  for (std::size_t k = 1; k < stages_.size(); ++k) {
    if (stages_[k].until_epoch <= stages_[k - 1].until_epoch) {
      fail(ErrorCode::InvalidArgument, "loss schedule stages must be increasing");
    }
  }
  for (const auto& s : stages_) {
    if (s.weights.descriptor < 0 || s.weights.matching < 0 || s.weights.regularization < 0) {
      fail(ErrorCode::InvalidArgument, "loss weights must be non-negative");
    }
  }
}

LossSchedule LossSchedule::standard() {
  return LossSchedule({{30, {1.0, 0.0, 1.0}}, {31, {0.1, 1.0, 1.0}}});
}

const LossWeights& LossSchedule::at(int epoch) const {
  if (stages_.empty()) fail(ErrorCode::InvalidArgument, "empty loss schedule");
  for (const auto& s : stages_) {
    if (epoch <= s.until_epoch) return s.weights;
  }
  return stages_.back().weights;
}

Var total_loss(Var descriptor, Var matching, Var regularization, const LossSchedule& schedule,
               int epoch) {
  const LossWeights& w = schedule.at(epoch);
  return diff::add(diff::add(diff::scale(descriptor, w.descriptor),
                             diff::scale(matching, w.matching)),
                   diff::scale(regularization, w.regularization));
}

}  // namespace bg::losses
