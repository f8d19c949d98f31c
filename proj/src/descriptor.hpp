// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical descriptor: TAG graph convolutions over a local graph pooled
// into a unit descriptor D_i, and the shape-graph node feature
//   f_i = MLP_p(D_i + MLP_e(fourier(v_i))).
#pragma once

#include <array>
#include <span>
#include <vector>

#include "diff.hpp"
#include "hiergraph.hpp"
#include "nn.hpp"

namespace bg::descriptor {

/// Fourier positional encoding with m-1 log-linear frequencies per axis.
struct EncodingConfig {
  double sigma = 8.0;
  int m = 9;

  int size() const { return 6 * (m - 1); }
  void validate() const;
};

/// For each axis x, y, z (in that order) and each j in 0..m-2, the pair
///   cos(2 pi sigma^(j/m) v_axis), sin(2 pi sigma^(j/m) v_axis).
/// Layout: [x: cos_0 sin_0 cos_1 sin_1 ... | y: ... | z: ...].
Matrix fourier_encode(const Vec3& v, const EncodingConfig& cfg);
/// One encoded row per position.
Matrix fourier_encode(std::span<const Vec3> positions, const EncodingConfig& cfg);

/// Propagation operators S_k = D^-1/2 A^k D^-1/2 for k = 0..max_k, where A
/// is the edge-weighted adjacency (A^0 = I) and D = diag(1 + row sums of A).
/// The unit self-degree keeps isolated nodes well defined.
std::vector<Matrix> tag_operators(const hiergraph::LocalGraph& graph, int max_k);

/// sum_{k=0..K} S_k X Theta_k with K = thetas.size() - 1.
diff::Var tag_conv(diff::Tape& tape, diff::Var features, std::span<const Matrix> operators,
                   std::span<const diff::Var> thetas);

/// Sparse form of the same operators: S_k = diag(d) A^k diag(d) with
/// d = D^-1/2.
struct TagPropagator {
  SparseMatrix adjacency;
  Matrix inv_sqrt_degree;  // n x 1
};
TagPropagator tag_propagator(const hiergraph::LocalGraph& graph);

/// Same sum evaluated as diag(d) (X' T_0 + A (X' T_1 + A (...))) with
/// X' = diag(d) X, never forming the powers of A.
diff::Var tag_conv(diff::Tape& tape, diff::Var features, const TagPropagator& propagator,
                   std::span<const diff::Var> thetas);

struct DescriptorConfig {
  int feature_dim = 64;
  std::array<int, 3> tag_widths{32, 64, 64};
  EncodingConfig encoding;

  void validate() const;
};

/// Owns the layer layout; parameters live in a ParameterStore.
class DescriptorModel {
 public:
  explicit DescriptorModel(DescriptorConfig cfg);

  const DescriptorConfig& config() const { return cfg_; }
  const nn::MlpSpec& head() const { return head_; }
  const nn::MlpSpec& positional() const { return positional_; }
  const nn::MlpSpec& fusion() const { return fusion_; }

  static std::string theta_name(int layer, int k);

  void init(diff::ParameterStore& store, diff::Rng& rng) const;

  /// TAG(K=1) -> ReLU -> TAG(K=2) -> ReLU -> TAG(K=3) -> max-pool over
  /// nodes, before the head. Nodes are processed in ascending vertex order
  /// so the result does not depend on the order nodes or edges are listed.
  diff::Var pooled_features(diff::Tape& tape, diff::ParameterStore& store,
                            const hiergraph::LocalGraph& graph) const;

  /// Unit-norm descriptor, one row per local graph.
  diff::Var local_descriptors(diff::Tape& tape, diff::ParameterStore& store,
                              std::span<const hiergraph::LocalGraph> graphs) const;
  diff::Var local_descriptor(diff::Tape& tape, diff::ParameterStore& store,
                             const hiergraph::LocalGraph& graph) const;

  /// f_i = MLP_p(D_i + MLP_e(gamma(v_i))), one row per node.
  diff::Var node_features(diff::Tape& tape, diff::ParameterStore& store, diff::Var descriptors,
                          std::span<const Vec3> positions) const;

 private:
  DescriptorConfig cfg_;
  nn::MlpSpec head_;
  nn::MlpSpec positional_;
  nn::MlpSpec fusion_;
};

}  // namespace bg::descriptor
