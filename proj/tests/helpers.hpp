// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <tuple>
#include <vector>

#include "diff.hpp"
#include "mesh.hpp"
#include "oracles.hpp"

namespace testing_helpers {

using WeightedEdge = std::tuple<int, int, double>;

inline bg::mesh::MeshGraph make_graph(int n, const std::vector<WeightedEdge>& edges) {
  bg::mesh::MeshGraph g;
  g.adjacency.resize(static_cast<std::size_t>(n));
  for (const auto& [a, b, w] : edges) {
    g.adjacency[a].push_back({b, w});
    g.adjacency[b].push_back({a, w});
  }
  return g;
}

inline std::vector<WeightedEdge> path_edges(int n, double w = 1.0) {
  std::vector<WeightedEdge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1, w);
  return edges;
}

/// rows x cols lattice in the z=0 plane with unit spacing, two triangles per cell.
inline bg::mesh::TriangleMesh grid_mesh(int rows, int cols, double spacing = 1.0) {
  bg::mesh::TriangleMesh m;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m.vertices.emplace_back(c * spacing, r * spacing, 0.0);
  auto at = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) {
      m.faces.push_back({at(r, c), at(r, c + 1), at(r + 1, c + 1)});
      m.faces.push_back({at(r, c), at(r + 1, c + 1), at(r + 1, c)});
    }
  return m;
}

/// Row-major copy of a matrix for the plain-loop oracles.
inline std::vector<std::vector<double>> to_grid(const bg::Matrix& m) {
  std::vector<std::vector<double>> g(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i].push_back(m(i, j));
  return g;
}

inline bg::Matrix from_grid(const std::vector<std::vector<double>>& g) {
  bg::Matrix m(static_cast<Eigen::Index>(g.size()), g.empty() ? 0 : static_cast<Eigen::Index>(g[0].size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g[i].size(); ++j) m(i, j) = g[i][j];
  return m;
}

inline oracle::GruWeights gru_weights(const bg::diff::ParameterStore& store, const std::string& prefix) {
  auto g = [&](const char* n) { return to_grid(store.at(prefix + "/" + n).value); };
  oracle::GruWeights w;
  w.wz = g("W_z");
  w.uz = g("U_z");
  w.bz = g("b_z")[0];
  w.wr = g("W_r");
  w.ur = g("U_r");
  w.br = g("b_r")[0];
  w.wh = g("W_h");
  w.uh = g("U_h");
  w.bh = g("b_h")[0];
  return w;
}

inline bg::mesh::TriangleMesh tetrahedron() {
  bg::mesh::TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.faces = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  return m;
}

}  // namespace testing_helpers
