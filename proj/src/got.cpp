// SPDX-License-Identifier: Apache-2.0
#include "got.hpp"

#include <cmath>

#include "error.hpp"

namespace bg::got {

using diff::Var;

Var score_matrix(Var fa, Var fb) {
  if (fa.cols() != fb.cols()) {
    fail(ErrorCode::ShapeMismatch, "score_matrix: feature widths " + std::to_string(fa.cols()) +
                                       " and " + std::to_string(fb.cols()) + " differ");
  }
  return diff::matmul(fa, diff::transpose(fb));
}

Var sinkhorn(Var scores, int iterations, double temperature) {
  if (iterations < 1) fail(ErrorCode::InvalidArgument, "sinkhorn needs at least one iteration");
  if (!(temperature > 0.0)) fail(ErrorCode::InvalidArgument, "sinkhorn temperature must be > 0");
  if (scores.rows() != scores.cols() || scores.rows() == 0) {
    fail(ErrorCode::ShapeMismatch, "sinkhorn expects a non-empty square score matrix");
  }
  if (!scores.value().allFinite()) fail(ErrorCode::Numerical, "sinkhorn: non-finite scores");
  const double log_marginal = -std::log(static_cast<double>(scores.rows()));
  Var z = diff::scale(scores, 1.0 / temperature);
  for (int it = 0; it < iterations; ++it) {
    z = diff::log_normalize_rows(z, log_marginal);
    z = diff::log_normalize_cols(z, log_marginal);
  }
  return z;
}

TransportPlan make_plan(const Matrix& log_plan, int iterations) {
  TransportPlan plan;
  plan.log_plan = log_plan;
  plan.iterations = iterations;
  const double target = 1.0 / static_cast<double>(log_plan.rows());
  const Matrix p = log_plan.array().exp().matrix();
  const double row_dev = (p.rowwise().sum().array() - target).abs().maxCoeff();
  const double col_dev = (p.colwise().sum().array() - target).abs().maxCoeff();
  plan.max_marginal_deviation = std::max(row_dev, col_dev);
  plan.converged = plan.max_marginal_deviation < kMarginalTolerance;
  return plan;
}

ConfidenceVars confidence_weights(Var log_plan) {
  Var rows = diff::row_max(diff::log_normalize_rows(log_plan, 0.0));
  Var cols = diff::transpose(diff::col_max(diff::log_normalize_cols(log_plan, 0.0)));
  return {rows, cols};
}

NodeConfidence confidence_weights(const Matrix& log_plan) {
  diff::Tape tape;
  auto vars = confidence_weights(tape.constant(log_plan));
  return {vars.w_row.value(), vars.w_col.value()};
}

Var gated_propagation(diff::Tape& tape, diff::ParameterStore& store, const nn::GruSpec& gru,
                      const std::vector<std::vector<int>>& neighbors, Var hidden,
                      Var log_confidence, int steps) {
  if (steps < 0) fail(ErrorCode::InvalidArgument, "propagation steps must be >= 0");
  if (log_confidence.rows() != hidden.rows() || log_confidence.cols() != 1) {
    fail(ErrorCode::ShapeMismatch, "one log confidence per node required");
  }
  Var weight = diff::exp(log_confidence);
  for (int t = 0; t < steps; ++t) {
    Var message = diff::neighbor_max(diff::scale_rows(hidden, weight), neighbors);
    hidden = nn::gru_cell(tape, hidden, message, store, gru);
  }
  return hidden;
}

std::string to_string(MatchMode mode) {
  return mode == MatchMode::Mutual ? "mutual" : "row_argmax";
}

MatchMode match_mode_from_string(const std::string& text) {
  if (text == "mutual") return MatchMode::Mutual;
  if (text == "row_argmax") return MatchMode::RowArgmax;
  fail(ErrorCode::InvalidArgument, "unknown match mode '" + text + "'");
}

std::size_t MatchSet::mutual_count() const {
  std::size_t n = 0;
  for (const auto& m : pairs) n += m.mutual ? 1 : 0;
  return n;
}

MatchSet extract_matches(const Matrix& log_plan, MatchMode mode) {
  MatchSet set;
  set.mode = mode;
  set.n = static_cast<int>(log_plan.rows());
  const Eigen::Index rows = log_plan.rows(), cols = log_plan.cols();
  std::vector<Eigen::Index> col_arg(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index l = 0; l < cols; ++l) {
    for (Eigen::Index i = 1; i < rows; ++i) {
      if (log_plan(i, l) > log_plan(col_arg[l], l)) col_arg[l] = i;
    }
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < cols; ++l) {
      if (log_plan(i, l) > log_plan(i, best)) best = l;
    }
    const double m = log_plan.row(i).maxCoeff();
    const double lse = m + std::log((log_plan.row(i).array() - m).exp().sum());
    const bool mutual = col_arg[best] == i;
    if (mode == MatchMode::Mutual && !mutual) continue;
    set.pairs.push_back({static_cast<int>(i), static_cast<int>(best),
                         std::exp(log_plan(i, best) - lse), mutual});
  }
  return set;
}

void GotConfig::validate() const {
  if (n_got < 0 || n_gfp < 0) fail(ErrorCode::InvalidArgument, "n_got and n_gfp must be >= 0");
  if (sinkhorn_iters < 1) fail(ErrorCode::InvalidArgument, "sinkhorn_iters must be >= 1");
  if (!(temperature > 0.0)) fail(ErrorCode::InvalidArgument, "temperature must be > 0");
}

GotOutput got_forward(diff::Tape& tape, diff::ParameterStore& store, const nn::GruSpec& gru,
                      const hiergraph::ShapeGraph& shape_a,
                      const hiergraph::ShapeGraph& shape_b, Var features_a, Var features_b,
                      const GotConfig& cfg) {
  cfg.validate();
  if (shape_a.size() != shape_b.size()) {
    fail(ErrorCode::ShapeMismatch, "shape graphs have " + std::to_string(shape_a.size()) +
                                       " and " + std::to_string(shape_b.size()) + " nodes");
  }
  if (features_a.rows() != static_cast<Eigen::Index>(shape_a.size()) ||
      features_b.rows() != static_cast<Eigen::Index>(shape_b.size())) {
    fail(ErrorCode::ShapeMismatch, "one feature row per shape-graph node required");
  }
  const auto nbrs_a = shape_a.neighbors();
  const auto nbrs_b = shape_b.neighbors();
  auto assign = [&](Var fa, Var fb) {
    Var scores = score_matrix(diff::l2_normalize_rows(fa), diff::l2_normalize_rows(fb));
    return sinkhorn(scores, cfg.sinkhorn_iters, cfg.temperature);
  };

  Var ha = features_a;
  Var hb = features_b;
  for (int round = 0; round < cfg.n_got; ++round) {
    Var log_plan = assign(ha, hb);
    ConfidenceVars conf = confidence_weights(log_plan);
    ha = gated_propagation(tape, store, gru, nbrs_a, ha, conf.w_row, cfg.n_gfp);
    hb = gated_propagation(tape, store, gru, nbrs_b, hb, conf.w_col, cfg.n_gfp);
  }
  GotOutput out;
  out.log_plan = assign(ha, hb);
  out.confidence = confidence_weights(out.log_plan);
  out.features_a = ha;
  out.features_b = hb;
  out.plan = make_plan(out.log_plan.value(), cfg.sinkhorn_iters);
  out.matches = extract_matches(out.log_plan.value(), cfg.mode);
  return out;
}

}  // namespace bg::got
