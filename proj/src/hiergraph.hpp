// SPDX-License-Identifier: Apache-2.0
//
// The two graph levels: seed-centered local graphs cut from the mesh graph,
// and the coarse shape graph over all seeds. Also the geodesic supervision
// matrix between seeds of two shapes.
#pragma once

#include <limits>
#include <span>
#include <vector>

#include "diff.hpp"
#include "mesh.hpp"
#include "types.hpp"

namespace bg::hiergraph {

/// How the local-graph cut distance is measured on the mesh graph.
enum class CutMetric { Hops, Geodesic };

struct LocalNode {
  int vertex;
  Vec3 coord;  // relative to the seed
};

struct LocalEdge {
  int a;  // node indices
  int b;
  double weight;  // Euclidean distance between the two nodes
};

/// Seed-centered subgraph. The seed is node 0 at the origin. Edges join
/// every node pair closer than `radius` and are listed in both directions.
struct LocalGraph {
  int seed = -1;
  double radius = 0.0;
  std::vector<LocalNode> nodes;
  std::vector<LocalEdge> edges;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Nodes are the vertices within d_cut of the seed (hop count or geodesic,
/// inclusive), ordered seed first then by vertex index.
LocalGraph extract_local_graph(const mesh::MeshGraph& graph, std::span<const Vec3> vertices,
                               int seed, double d_cut, double radius,
                               CutMetric metric = CutMetric::Hops);

/// Picks a vertex whose hop distance from positive_seed lies in
/// [min_hops, max_hops], uniformly among candidates.
int mine_hard_negative(const mesh::MeshGraph& graph, int positive_seed, int min_hops,
                       int max_hops, diff::Rng& rng);

/// Vertices whose hop distance from source is within [min_hops, max_hops],
/// ascending. The candidate set mine_hard_negative draws from.
std::vector<int> hop_ring(const mesh::MeshGraph& graph, int source, int min_hops,
                          int max_hops);

struct ShapeEdge {
  int a;  // a < b, node indices
  int b;
  double weight;  // geodesic distance between the seeds
};

struct ShapeGraph {
  std::vector<int> seeds;
  std::vector<Vec3> positions;
  std::vector<ShapeEdge> edges;
  bool connected = true;

  std::size_t size() const { return seeds.size(); }
  /// Per-node sorted neighbor lists.
  std::vector<std::vector<int>> neighbors() const;
};

/// Undirected edge (i, l) iff geodesic(seed_i, seed_l) <= r_shape.
ShapeGraph build_shape_graph(std::span<const int> seeds, std::span<const Vec3> vertices,
                             const mesh::MeshGraph& graph, double r_shape);

/// Entry (i, l) is the geodesic on shape B between correspondence[seedsA[i]]
/// and seedsB[l]. correspondence maps every A vertex to a B vertex (-1 when
/// undefined).
Matrix bipartite_geodesic_matrix(std::span<const int> correspondence,
                                 std::span<const int> seeds_a, std::span<const int> seeds_b,
                                 const mesh::MeshGraph& graph_b);

}  // namespace bg::hiergraph
