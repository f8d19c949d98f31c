// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "diff.hpp"
#include "hiergraph.hpp"

namespace bg::losses {

/// max(sum_i [||a_i - b_i|| - ||a_i - n_i||] + margin, 0), one clamp over the
/// whole batch.
diff::Var triplet_loss(diff::Var anchors, diff::Var positives, diff::Var negatives,
                       double margin);

/// (r_d - M) / r_d where M <= r_d, zero elsewhere.
Matrix soft_weight_matrix(const Matrix& geodesics, double r_d);

/// -sum over W > 0 of W * log P^, with P^ the row-renormalized plan.
diff::Var matching_loss(diff::Var log_plan, const Matrix& weights);

/// Barycenters of target seeds under the row-renormalized plan.
diff::Var softpool_positions(diff::Var log_plan, const Matrix& target_positions);

/// Sum of incident edge lengths per node (N x 1).
diff::Var laplace_operator(diff::Var positions, std::span<const hiergraph::ShapeEdge> edges);
Matrix laplace_operator(const Matrix& positions, std::span<const hiergraph::ShapeEdge> edges);

/// sum_i |lap(predicted)_i - lap(source)_i| over the source shape-graph edges.
diff::Var regularization_loss(diff::Var predicted, const Matrix& source,
                              std::span<const hiergraph::ShapeEdge> edges);

struct LossWeights {
  double descriptor = 1.0;
  double matching = 0.0;
  double regularization = 1.0;
};

/// Weights by 1-based epoch. Stage k covers epochs up to and including
/// until_epoch; the last stage also covers everything after.
class LossSchedule {
 public:
  struct Stage {
    int until_epoch;
    LossWeights weights;
  };

  LossSchedule() = default;
  explicit LossSchedule(std::vector<Stage> stages);

  /// (1, 0, 1) through epoch 30, then (0.1, 1, 1).
  static LossSchedule standard();

  const LossWeights& at(int epoch) const;
  const std::vector<Stage>& stages() const { return stages_; }

 private:
  std::vector<Stage> stages_;
};

/// gamma_D L_D + gamma_M L_M + gamma_R L_R with the epoch's weights.
diff::Var total_loss(diff::Var descriptor, diff::Var matching, diff::Var regularization,
                     const LossSchedule& schedule, int epoch);

}  // namespace bg::losses
