// SPDX-License-Identifier: Apache-2.0
#include "model.hpp"

#include "error.hpp"

namespace bg {

Matrix ShapeContext::seed_position_matrix() const {
  Matrix out(static_cast<Eigen::Index>(shape_graph.positions.size()), 3);
  for (std::size_t i = 0; i < shape_graph.positions.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = shape_graph.positions[i].transpose();
  }
  return out;
}

ShapeContext prepare_shape(mesh::TriangleMesh mesh, const TrainConfig& config) {
  ShapeContext ctx;
  ctx.mesh = std::move(mesh);
  if (ctx.mesh.vertices.size() < static_cast<std::size_t>(config.seeds)) {
    fail(ErrorCode::InvalidArgument, "mesh has " + std::to_string(ctx.mesh.vertices.size()) +
                                         " vertices, fewer than the " +
                                         std::to_string(config.seeds) + " requested seeds");
  }
  if (static_cast<std::size_t>(config.fps_start) >= ctx.mesh.vertices.size()) {
    fail(ErrorCode::InvalidArgument, "fps_start is not a vertex of the mesh");
  }
  ctx.graph = mesh::build_mesh_graph(ctx.mesh);
  ctx.seeds = mesh::farthest_point_sampling(ctx.mesh.vertices, config.seeds, config.fps_start);
  ctx.local_graphs = local_graphs_at(ctx, ctx.seeds, config);
  ctx.shape_graph =
      hiergraph::build_shape_graph(ctx.seeds, ctx.mesh.vertices, ctx.graph, config.shape_radius);
  return ctx;
}

std::vector<hiergraph::LocalGraph> local_graphs_at(const ShapeContext& shape,
                                                   std::span<const int> vertices,
                                                   const TrainConfig& config) {
  std::vector<hiergraph::LocalGraph> out;
  out.reserve(vertices.size());
  for (int v : vertices) {
    out.push_back(hiergraph::extract_local_graph(shape.graph, shape.mesh.vertices, v, config.d_cut,
                                                 config.local_radius, config.cut_metric));
  }
  return out;
}

MatchingModel::MatchingModel(const TrainConfig& config)
    : config_(config),
      descriptor_((config.validate(), config.descriptor_config())),
      gru_{"gfp", config.feature_dim, config.feature_dim},
      got_(config.got_config()) {}

diff::ParameterStore MatchingModel::create_parameters(std::uint64_t seed) const {
  diff::ParameterStore store;
  diff::Rng rng(seed);
  init(store, rng);
  return store;
}

void MatchingModel::init(diff::ParameterStore& store, diff::Rng& rng) const {
  descriptor_.init(store, rng);
  nn::init_gru(store, gru_, rng);
}

ForwardResult MatchingModel::forward(diff::Tape& tape, diff::ParameterStore& store,
                                     const ShapeContext& a, const ShapeContext& b) const {
  ForwardResult out;
  out.descriptors_a = descriptor_.local_descriptors(tape, store, a.local_graphs);
  out.descriptors_b = descriptor_.local_descriptors(tape, store, b.local_graphs);
  diff::Var fa = descriptor_.node_features(tape, store, out.descriptors_a, a.shape_graph.positions);
  diff::Var fb = descriptor_.node_features(tape, store, out.descriptors_b, b.shape_graph.positions);
  out.got = got::got_forward(tape, store, gru_, a.shape_graph, b.shape_graph, fa, fb, got_);
  return out;
}

MatchResult MatchingModel::match(diff::ParameterStore& store, const ShapeContext& a,
                                 const ShapeContext& b) const {
  diff::Tape tape;
  auto out = forward(tape, store, a, b);
  return {std::move(out.got.plan), std::move(out.got.matches)};
}

}  // namespace bg
