// SPDX-License-Identifier: Apache-2.0
#include "hiergraph.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "error.hpp"

namespace bg::hiergraph {

LocalGraph extract_local_graph(const mesh::MeshGraph& graph, std::span<const Vec3> vertices,
                               int seed, double d_cut, double radius, CutMetric metric) {
  if (seed < 0 || static_cast<std::size_t>(seed) >= graph.vertex_count() ||
      graph.vertex_count() != vertices.size()) {
    fail(ErrorCode::InvalidArgument, "local graph seed out of range");
  }
  if (!(d_cut >= 0.0)) fail(ErrorCode::InvalidArgument, "d_cut must be non-negative");
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "local radius must be positive");

  std::vector<int> members;
  if (metric == CutMetric::Hops) {
    const int max_hops = d_cut >= static_cast<double>(std::numeric_limits<int>::max())
                             ? std::numeric_limits<int>::max()
                             : static_cast<int>(std::floor(d_cut));
    const auto hops = mesh::hop_distances(graph, seed, max_hops);
    for (std::size_t v = 0; v < hops.size(); ++v) {
      if (hops[v] >= 0) members.push_back(static_cast<int>(v));
    }
  } else {
    for (const auto& [v, d] : mesh::dijkstra_geodesics(graph, seed, d_cut)) members.push_back(v);
  }
  // Seed first, the rest by ascending vertex index.
  members.erase(std::remove(members.begin(), members.end(), seed), members.end());
  members.insert(members.begin(), seed);

  LocalGraph local;
  local.seed = seed;
  local.radius = radius;
  local.nodes.reserve(members.size());
  for (int v : members) local.nodes.push_back({v, vertices[v] - vertices[seed]});
  const int n = static_cast<int>(local.nodes.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double dist = (local.nodes[a].coord - local.nodes[b].coord).norm();
      if (dist < radius) {
        local.edges.push_back({a, b, dist});
        local.edges.push_back({b, a, dist});
      }
    }
  }
  return local;
}

std::vector<int> hop_ring(const mesh::MeshGraph& graph, int source, int min_hops,
                          int max_hops) {
  const auto hops = mesh::hop_distances(graph, source, max_hops);
  std::vector<int> ring;
  for (std::size_t v = 0; v < hops.size(); ++v) {
    if (hops[v] >= min_hops && hops[v] <= max_hops) ring.push_back(static_cast<int>(v));
  }
  return ring;
}

int mine_hard_negative(const mesh::MeshGraph& graph, int positive_seed, int min_hops,
                       int max_hops, diff::Rng& rng) {
  if (min_hops < 1 || max_hops < min_hops) {
    fail(ErrorCode::InvalidArgument, "hard-negative ring needs 1 <= min_hops <= max_hops");
  }
  const auto ring = hop_ring(graph, positive_seed, min_hops, max_hops);
  if (ring.empty()) {
    fail(ErrorCode::InvalidArgument,
         "no vertex within hops [" + std::to_string(min_hops) + ", " +
             std::to_string(max_hops) + "] of vertex " + std::to_string(positive_seed) +
             "; widen the hard-negative ring");
  }
  std::uniform_int_distribution<std::size_t> pick(0, ring.size() - 1);
  return ring[pick(rng)];
}

std::vector<std::vector<int>> ShapeGraph::neighbors() const {
  std::vector<std::vector<int>> out(seeds.size());
  for (const auto& e : edges) {
    out[e.a].push_back(e.b);
    out[e.b].push_back(e.a);
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

ShapeGraph build_shape_graph(std::span<const int> seeds, std::span<const Vec3> vertices,
                             const mesh::MeshGraph& graph, double r_shape) {
  if (!(r_shape > 0.0)) fail(ErrorCode::InvalidArgument, "r_shape must be positive");
  ShapeGraph shape;
  shape.seeds.assign(seeds.begin(), seeds.end());
  std::vector<int> node_of(graph.vertex_count(), -1);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const int s = seeds[i];
    if (s < 0 || static_cast<std::size_t>(s) >= vertices.size()) {
      fail(ErrorCode::InvalidArgument, "shape graph seed out of range");
    }
    if (node_of[s] >= 0) fail(ErrorCode::InvalidArgument, "shape graph seeds must be distinct");
    node_of[s] = static_cast<int>(i);
    shape.positions.push_back(vertices[s]);
  }
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (const auto& [v, d] : mesh::dijkstra_geodesics(graph, seeds[i], r_shape)) {
      const int l = node_of[v];
      if (l > static_cast<int>(i)) shape.edges.push_back({static_cast<int>(i), l, d});
    }
  }
  std::sort(shape.edges.begin(), shape.edges.end(), [](const ShapeEdge& x, const ShapeEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  // Connectivity over shape edges.
  const auto nbrs = shape.neighbors();
  std::vector<char> seen(seeds.size(), 0);
  std::vector<int> stack;
  if (!seeds.empty()) {
    stack.push_back(0);
    seen[0] = 1;
  }
  std::size_t reached = stack.size();
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : nbrs[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  shape.connected = reached == seeds.size();
  return shape;
}

Matrix bipartite_geodesic_matrix(std::span<const int> correspondence,
                                 std::span<const int> seeds_a, std::span<const int> seeds_b,
                                 const mesh::MeshGraph& graph_b) {
  Matrix m(static_cast<Eigen::Index>(seeds_a.size()), static_cast<Eigen::Index>(seeds_b.size()));
  for (std::size_t i = 0; i < seeds_a.size(); ++i) {
    const int s = seeds_a[i];
    if (s < 0 || static_cast<std::size_t>(s) >= correspondence.size() || correspondence[s] < 0) {
      fail(ErrorCode::InvalidArgument,
           "no correspondence for source seed vertex " + std::to_string(s));
    }
    const auto dist = mesh::dijkstra_all(graph_b, correspondence[s]);
    for (std::size_t l = 0; l < seeds_b.size(); ++l) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = dist[seeds_b[l]];
    }
  }
  return m;
}

}  // namespace bg::hiergraph
