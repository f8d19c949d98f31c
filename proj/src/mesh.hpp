// SPDX-License-Identifier: Apache-2.0
//
// Triangle mesh ingestion and the edge graph used for shortest-path geodesics
// and seed sampling.
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "types.hpp"

namespace bg::mesh {

using bg::Vec3;
using Face = std::array<int, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }
};

enum class MeshFormat { Off, PlyAscii };

/// Parses an OFF or ascii PLY document. Errors name the offending line.
TriangleMesh load_mesh(std::string_view bytes, MeshFormat format);

/// Reads a file and picks the format from its extension (.off / .ply).
TriangleMesh load_mesh_file(const std::filesystem::path& path);

std::string write_off(const TriangleMesh& mesh);
void save_off(const TriangleMesh& mesh, const std::filesystem::path& path);

/// Centers the mesh on its vertex centroid and scales the farthest vertex to
/// norm 1. Throws DegenerateGeometry when every vertex coincides.
TriangleMesh normalize_to_unit_ball(const TriangleMesh& mesh);

struct GraphEdge {
  int to;
  double length;
};

struct MeshGraph {
  std::vector<std::vector<GraphEdge>> adjacency;

  std::size_t vertex_count() const { return adjacency.size(); }
  std::size_t edge_count() const;
};

/// One undirected edge per distinct face edge, weighted by Euclidean length.
/// Neighbor lists are sorted by vertex index.
MeshGraph build_mesh_graph(const TriangleMesh& mesh);

using GeodesicMap = std::map<int, double>;

/// Exact shortest-path distances over edge weights. With a cutoff, only
/// vertices at distance <= cutoff are reported.
GeodesicMap dijkstra_geodesics(const MeshGraph& graph, int source,
                               std::optional<double> cutoff = std::nullopt);

/// Dense variant: infinity for unreachable vertices.
std::vector<double> dijkstra_all(const MeshGraph& graph, int source);

/// Unweighted hop counts from source; -1 for vertices beyond max_hops or
/// unreachable.
std::vector<int> hop_distances(const MeshGraph& graph, int source,
                               int max_hops);

/// Greedy max-min selection in Euclidean space. The first element is start;
/// ties go to the lowest index.
std::vector<int> farthest_point_sampling(std::span<const Vec3> points,
                                         std::size_t count, int start = 0);

/// Sum of triangle areas. Degenerate faces contribute zero.
double surface_area(const TriangleMesh& mesh);

}  // namespace bg::mesh
