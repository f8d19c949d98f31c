// SPDX-License-Identifier: Apache-2.0
//
// Gated optimal transport. Scores are inner products of node features, the
// assignment comes from log-domain Sinkhorn toward uniform 1/N marginals, and
// gated feature propagation mixes confident neighbor states into each node
// through a GRU before the assignment is recomputed.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "diff.hpp"
#include "hiergraph.hpp"
#include "nn.hpp"

namespace bg::got {

/// C = fa fb^T.
diff::Var score_matrix(diff::Var fa, diff::Var fb);

/// Log plan after `iterations` rounds of row then column normalization of
/// C / temperature. Every step is recorded on the tape.
diff::Var sinkhorn(diff::Var scores, int iterations, double temperature);

struct TransportPlan {
  Matrix log_plan;
  int iterations = 0;
  /// Largest |row or column sum - 1/N| of exp(log_plan).
  double max_marginal_deviation = 0.0;
  bool converged = false;  // deviation below kMarginalTolerance
};

inline constexpr double kMarginalTolerance = 1e-6;

TransportPlan make_plan(const Matrix& log_plan, int iterations);

/// Per-node log confidences: w_row[i] = max_l of the row-renormalized log
/// plan, w_col[l] = max_i of the column-renormalized log plan. Both N x 1.
struct ConfidenceVars {
  diff::Var w_row;
  diff::Var w_col;
};
ConfidenceVars confidence_weights(diff::Var log_plan);

struct NodeConfidence {
  Matrix w_row;
  Matrix w_col;
};
NodeConfidence confidence_weights(const Matrix& log_plan);

/// `steps` synchronous updates h_i <- GRU(h_i, max_{l in N(i)} exp(w_l) h_l).
/// Nodes without neighbors receive a zero message.
diff::Var gated_propagation(diff::Tape& tape, diff::ParameterStore& store,
                            const nn::GruSpec& gru,
                            const std::vector<std::vector<int>>& neighbors, diff::Var hidden,
                            diff::Var log_confidence, int steps);

enum class MatchMode { RowArgmax, Mutual };

std::string to_string(MatchMode mode);
MatchMode match_mode_from_string(const std::string& text);

struct Match {
  int source;
  int target;
  double confidence;  // row-renormalized probability of the pair
  bool mutual;
};

struct MatchSet {
  MatchMode mode = MatchMode::Mutual;
  int n = 0;
  std::vector<Match> pairs;

  std::size_t mutual_count() const;
};

/// RowArgmax: (i, argmax_l) for every row, first index on ties.
/// Mutual: only pairs whose row and column argmaxes agree.
MatchSet extract_matches(const Matrix& log_plan, MatchMode mode);

struct GotConfig {
  int n_got = 1;
  int n_gfp = 2;
  int sinkhorn_iters = 100;
  double temperature = 0.1;
  MatchMode mode = MatchMode::Mutual;

  void validate() const;
};

struct GotOutput {
  diff::Var log_plan;        // final assignment
  ConfidenceVars confidence;  // of the final assignment
  diff::Var features_a;      // propagated features, before normalization
  diff::Var features_b;
  TransportPlan plan;
  MatchSet matches;
};

/// Scores always use row-normalized features, so C lies in [-1, 1].
/// Loop n_got times: Sinkhorn -> confidences -> n_gfp propagation steps on
/// each shape graph with its own confidences. A last Sinkhorn on the updated
/// features yields the returned plan.
GotOutput got_forward(diff::Tape& tape, diff::ParameterStore& store, const nn::GruSpec& gru,
                      const hiergraph::ShapeGraph& shape_a,
                      const hiergraph::ShapeGraph& shape_b, diff::Var features_a,
                      diff::Var features_b, const GotConfig& cfg);

}  // namespace bg::got
