// SPDX-License-Identifier: Apache-2.0
//
// The full matching network: local descriptor, node-feature fusion and the
// GOT propagation cell, sharing one parameter store.
#pragma once

#include <span>
#include <vector>

#include "config.hpp"
#include "descriptor.hpp"
#include "got.hpp"
#include "hiergraph.hpp"
#include "mesh.hpp"
#include "nn.hpp"

namespace bg {

/// Per-mesh preprocessing shared by training, evaluation and matching.
struct ShapeContext {
  mesh::TriangleMesh mesh;
  mesh::MeshGraph graph;
  std::vector<int> seeds;
  std::vector<hiergraph::LocalGraph> local_graphs;
  hiergraph::ShapeGraph shape_graph;

  std::vector<Vec3> seed_positions() const { return shape_graph.positions; }
  Matrix seed_position_matrix() const;
};

/// FPS seeds, their local graphs and the shape graph.
ShapeContext prepare_shape(mesh::TriangleMesh mesh, const TrainConfig& config);

/// Local graphs cut around arbitrary vertices of a prepared shape.
std::vector<hiergraph::LocalGraph> local_graphs_at(const ShapeContext& shape,
                                                   std::span<const int> vertices,
                                                   const TrainConfig& config);

struct ForwardResult {
  diff::Var descriptors_a;
  diff::Var descriptors_b;
  got::GotOutput got;
};

struct MatchResult {
  got::TransportPlan plan;
  got::MatchSet matches;
};

class MatchingModel {
 public:
  explicit MatchingModel(const TrainConfig& config);

  /// Fresh parameters, deterministic in `seed`.
  diff::ParameterStore create_parameters(std::uint64_t seed) const;
  void init(diff::ParameterStore& store, diff::Rng& rng) const;

  ForwardResult forward(diff::Tape& tape, diff::ParameterStore& store, const ShapeContext& a,
                        const ShapeContext& b) const;
  /// Inference-only forward.
  MatchResult match(diff::ParameterStore& store, const ShapeContext& a,
                       const ShapeContext& b) const;

  const descriptor::DescriptorModel& descriptor() const { return descriptor_; }
  const nn::GruSpec& gru() const { return gru_; }
  const got::GotConfig& got_config() const { return got_; }
  const TrainConfig& config() const { return config_; }

 private:
  TrainConfig config_;
  descriptor::DescriptorModel descriptor_;
  nn::GruSpec gru_;
  got::GotConfig got_;
};

}  // namespace bg
