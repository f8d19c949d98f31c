// SPDX-License-Identifier: Apache-2.0
#include "descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "error.hpp"

namespace bg::descriptor {

using diff::Var;

void EncodingConfig::validate() const {
  if (!(sigma > 1.0)) fail(ErrorCode::InvalidArgument, "encoding sigma must exceed 1");
  if (m < 2) fail(ErrorCode::InvalidArgument, "encoding m must be at least 2");
}

Matrix fourier_encode(const Vec3& v, const EncodingConfig& cfg) {
  cfg.validate();
  Matrix out(1, cfg.size());
  Eigen::Index col = 0;
  for (int axis = 0; axis < 3; ++axis) {
    for (int j = 0; j + 1 < cfg.m; ++j) {
      const double freq = 2.0 * std::numbers::pi *
                          std::pow(cfg.sigma, static_cast<double>(j) / cfg.m);
      out(0, col++) = std::cos(freq * v[axis]);
      out(0, col++) = std::sin(freq * v[axis]);
    }
  }
  return out;
}

Matrix fourier_encode(std::span<const Vec3> positions, const EncodingConfig& cfg) {
  Matrix out(static_cast<Eigen::Index>(positions.size()), cfg.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = fourier_encode(positions[i], cfg);
  }
  return out;
}

std::vector<Matrix> tag_operators(const hiergraph::LocalGraph& graph, int max_k) {
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  Matrix adjacency = Matrix::Zero(n, n);
  for (const auto& e : graph.edges) {
    if (e.a == e.b) continue;
    adjacency(e.a, e.b) = e.weight;
    adjacency(e.b, e.a) = e.weight;
  }
  Eigen::VectorXd inv_sqrt_degree(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt_degree[i] = 1.0 / std::sqrt(1.0 + adjacency.row(i).sum());
  }
  std::vector<Matrix> ops;
  Matrix power = Matrix::Identity(n, n);
  for (int k = 0; k <= max_k; ++k) {
    if (k > 0) power = power * adjacency;
    ops.push_back(inv_sqrt_degree.asDiagonal() * power * inv_sqrt_degree.asDiagonal());
  }
  return ops;
}

Var tag_conv(diff::Tape& tape, Var features, std::span<const Matrix> operators,
             std::span<const Var> thetas) {
  if (thetas.empty() || operators.size() < thetas.size()) {
    fail(ErrorCode::InvalidArgument, "tag_conv needs one operator per hop weight");
  }
  Var out;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    if (operators[k].rows() != features.rows()) {
      fail(ErrorCode::ShapeMismatch, "tag_conv operator size differs from node count");
    }
    Var term = diff::matmul(tape.constant(operators[k]), diff::matmul(features, thetas[k]));
    out = out.valid() ? diff::add(out, term) : term;
  }
  return out;
}

TagPropagator tag_propagator(const hiergraph::LocalGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.nodes.size());
  std::vector<Eigen::Triplet<double>> entries;
  Matrix degree = Matrix::Ones(n, 1);
  for (const auto& e : graph.edges) {
    if (e.a == e.b) continue;
    entries.emplace_back(e.a, e.b, e.weight);
    entries.emplace_back(e.b, e.a, e.weight);
  }
  TagPropagator p;
  p.adjacency.resize(n, n);
  // Edges may be listed in both directions; a repeated pair keeps one weight.
  p.adjacency.setFromTriplets(entries.begin(), entries.end(),
                              [](double, double b) { return b; });
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(p.adjacency, i); it; ++it) degree(i, 0) += it.value();
  }
  p.inv_sqrt_degree = degree.array().rsqrt().matrix();
  return p;
}

Var tag_conv(diff::Tape& tape, Var features, const TagPropagator& propagator,
             std::span<const Var> thetas) {
  if (thetas.empty()) fail(ErrorCode::InvalidArgument, "tag_conv needs at least one hop weight");
  if (propagator.adjacency.rows() != features.rows()) {
    fail(ErrorCode::ShapeMismatch, "tag_conv operator size differs from node count");
  }
  Var scale = tape.constant(propagator.inv_sqrt_degree);
  Var scaled = diff::scale_rows(features, scale);
  Var acc = diff::matmul(scaled, thetas.back());
  for (std::size_t k = thetas.size() - 1; k-- > 0;) {
    acc = diff::add(diff::matmul(scaled, thetas[k]), diff::sparse_matmul(propagator.adjacency, acc));
  }
  return diff::scale_rows(acc, scale);
}

void DescriptorConfig::validate() const {
  if (feature_dim <= 0) fail(ErrorCode::InvalidArgument, "feature dimension must be positive");
  for (int w : tag_widths) {
    if (w <= 0) fail(ErrorCode::InvalidArgument, "TAG widths must be positive");
  }
  encoding.validate();
}

DescriptorModel::DescriptorModel(DescriptorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.feature_dim;
  head_ = {"head", {cfg_.tag_widths[2], d}, nn::Activation::Relu};
  positional_ = {"pos_mlp", {cfg_.encoding.size(), d, d}, nn::Activation::Relu};
  fusion_ = {"fusion_mlp", {d, d, d}, nn::Activation::Relu};
}

std::string DescriptorModel::theta_name(int layer, int k) {
  return "tag" + std::to_string(layer + 1) + "/theta" + std::to_string(k);
}

void DescriptorModel::init(diff::ParameterStore& store, diff::Rng& rng) const {
  int in = 3;
  for (int layer = 0; layer < 3; ++layer) {
    for (int k = 0; k <= layer + 1; ++k) {
      store.add_glorot(theta_name(layer, k), in, cfg_.tag_widths[layer], rng);
    }
    in = cfg_.tag_widths[layer];
  }
  nn::init_mlp(store, head_, rng);
  nn::init_mlp(store, positional_, rng);
  nn::init_mlp(store, fusion_, rng);
}

Var DescriptorModel::pooled_features(diff::Tape& tape, diff::ParameterStore& store,
                                     const hiergraph::LocalGraph& graph) const {
  if (graph.nodes.empty()) fail(ErrorCode::InvalidArgument, "local graph has no nodes");
  // Canonical node order by vertex index.
  std::vector<int> order(graph.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return graph.nodes[x].vertex < graph.nodes[y].vertex;
  });
  std::vector<int> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  hiergraph::LocalGraph canonical;
  canonical.seed = graph.seed;
  canonical.radius = graph.radius;
  for (int idx : order) canonical.nodes.push_back(graph.nodes[idx]);
  for (const auto& e : graph.edges) canonical.edges.push_back({rank[e.a], rank[e.b], e.weight});

  const TagPropagator prop = tag_propagator(canonical);
  Matrix coords(static_cast<Eigen::Index>(canonical.nodes.size()), 3);
  for (std::size_t i = 0; i < canonical.nodes.size(); ++i) {
    coords.row(static_cast<Eigen::Index>(i)) = canonical.nodes[i].coord.transpose();
  }
  Var x = tape.constant(std::move(coords));
  for (int layer = 0; layer < 3; ++layer) {
    std::vector<Var> thetas;
    for (int k = 0; k <= layer + 1; ++k) thetas.push_back(tape.parameter(store, theta_name(layer, k)));
    x = tag_conv(tape, x, prop, thetas);
    if (layer < 2) x = diff::relu(x);
  }
  return diff::col_max(x);
}

Var DescriptorModel::local_descriptors(diff::Tape& tape, diff::ParameterStore& store,
                                       std::span<const hiergraph::LocalGraph> graphs) const {
  std::vector<Var> pooled;
  pooled.reserve(graphs.size());
  for (const auto& g : graphs) pooled.push_back(pooled_features(tape, store, g));
  Var stacked = diff::concat_rows(pooled);
  return diff::l2_normalize_rows(nn::mlp_forward(tape, stacked, store, head_));
}

Var DescriptorModel::local_descriptor(diff::Tape& tape, diff::ParameterStore& store,
                                      const hiergraph::LocalGraph& graph) const {
  return local_descriptors(tape, store, std::span<const hiergraph::LocalGraph>(&graph, 1));
}

Var DescriptorModel::node_features(diff::Tape& tape, diff::ParameterStore& store,
                                   Var descriptors, std::span<const Vec3> positions) const {
  if (descriptors.rows() != static_cast<Eigen::Index>(positions.size())) {
    fail(ErrorCode::ShapeMismatch, "one position per descriptor row required");
  }
  Var encoded = tape.constant(fourier_encode(positions, cfg_.encoding));
  Var embedded = nn::mlp_forward(tape, encoded, store, positional_);
  if (embedded.cols() != descriptors.cols()) {
    fail(ErrorCode::ShapeMismatch, "positional embedding width differs from descriptor width");
  }
  return nn::mlp_forward(tape, diff::add(descriptors, embedded), store, fusion_);
}

}  // namespace bg::descriptor
