// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "error.hpp"
#include "helpers.hpp"
#include "mesh.hpp"
#include "oracles.hpp"

using namespace bg;
using namespace bg::mesh;
using testing_helpers::make_graph;

TEST_CASE("OFF minimal triangle") {
  const auto m = load_mesh("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n", MeshFormat::Off);
  CHECK(m.vertex_count() == 3);
  CHECK(m.face_count() == 1);
  CHECK(m.vertices[1].x() == 1.0);
  CHECK(m.faces[0] == Face{0, 1, 2});
}

TEST_CASE("OFF comments and counts on the header line") {
  const auto m = load_mesh("OFF 3 1 0\n# a comment\n0 0 0\n1 0 0\n\n0 1 0\n3 0 1 2\n", MeshFormat::Off);
  CHECK(m.face_count() == 1);
}

TEST_CASE("OFF count mismatch is a parse error naming a line") {
  try {
    load_mesh("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n", MeshFormat::Off);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("OFF rejects non-triangular faces and bad indices") {
  CHECK_THROWS_AS(load_mesh("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 3 2\n", MeshFormat::Off),
                  Error);
  CHECK_THROWS_AS(load_mesh("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n", MeshFormat::Off), Error);
  CHECK_THROWS_AS(load_mesh("NOFF\n3 1 0\n", MeshFormat::Off), Error);
}

TEST_CASE("PLY tetrahedron satisfies Euler's formula") {
  const char* ply =
      "ply\nformat ascii 1.0\ncomment hand built\nelement vertex 4\nproperty float x\n"
      "property float y\nproperty float z\nelement face 4\nproperty list uchar int vertex_indices\n"
      "end_header\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
  const auto m = load_mesh(ply, MeshFormat::PlyAscii);
  REQUIRE(m.face_count() == 4);
  std::set<std::pair<int, int>> edges;
  for (const auto& f : m.faces)
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  const long euler = static_cast<long>(m.vertex_count()) - static_cast<long>(edges.size()) +
                     static_cast<long>(m.face_count());
  CHECK(euler == 2);
}

TEST_CASE("PLY rejects binary payloads") {
  CHECK_THROWS_AS(load_mesh("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n",
                            MeshFormat::PlyAscii),
                  Error);
}

TEST_CASE("OFF write and reload round-trips exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  TriangleMesh m = testing_helpers::tetrahedron();
  for (auto& v : m.vertices) v = Vec3(u(rng), u(rng), u(rng));
  const auto back = load_mesh(write_off(m), MeshFormat::Off);
  REQUIRE(back.vertex_count() == m.vertex_count());
  for (std::size_t i = 0; i < m.vertex_count(); ++i) CHECK(back.vertices[i] == m.vertices[i]);
  CHECK(back.faces == m.faces);
}

TEST_CASE("normalize symmetric pair") {
  TriangleMesh m;
  m.vertices = {{2, 0, 0}, {-2, 0, 0}};
  const auto n = normalize_to_unit_ball(m);
  CHECK(n.vertices[0].isApprox(Vec3(1, 0, 0)));
  CHECK(n.vertices[1].isApprox(Vec3(-1, 0, 0)));
}

TEST_CASE("normalize is idempotent and preserves distance ratios") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  TriangleMesh m;
  for (int i = 0; i < 20; ++i) m.vertices.emplace_back(u(rng), u(rng), u(rng));
  const auto once = normalize_to_unit_ball(m);
  const auto twice = normalize_to_unit_ball(once);
  for (std::size_t i = 0; i < m.vertex_count(); ++i) {
    CHECK((once.vertices[i] - twice.vertices[i]).norm() < 1e-12);
  }
  double max_norm = 0;
  for (const auto& v : once.vertices) max_norm = std::max(max_norm, v.norm());
  CHECK(std::abs(max_norm - 1.0) < 1e-9);
  const double r_before = (m.vertices[0] - m.vertices[1]).norm() / (m.vertices[2] - m.vertices[3]).norm();
  const double r_after =
      (once.vertices[0] - once.vertices[1]).norm() / (once.vertices[2] - once.vertices[3]).norm();
  CHECK(std::abs(r_before - r_after) < 1e-9);
}

TEST_CASE("normalize unit cube corners against direct arithmetic") {
  TriangleMesh m;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int z = 0; z < 2; ++z) m.vertices.emplace_back(x, y, z);
  // Oracle: mean of the corners, then the largest distance from it.
  double mean[3] = {0, 0, 0};
  for (const auto& v : m.vertices)
    for (int k = 0; k < 3; ++k) mean[k] += v[k] / 8.0;
  double far = 0;
  for (const auto& v : m.vertices) {
    double s = 0;
    for (int k = 0; k < 3; ++k) s += (v[k] - mean[k]) * (v[k] - mean[k]);
    far = std::max(far, std::sqrt(s));
  }
  const auto n = normalize_to_unit_ball(m);
  for (std::size_t i = 0; i < 8; ++i) {
    for (int k = 0; k < 3; ++k) {
      CHECK(n.vertices[i][k] == doctest::Approx((m.vertices[i][k] - mean[k]) / far).epsilon(1e-12));
    }
    CHECK(std::abs(n.vertices[i].norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("normalize rejects coincident vertices") {
  TriangleMesh m;
  m.vertices = {{1, 1, 1}, {1, 1, 1}};
  try {
    normalize_to_unit_ball(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
  }
}

TEST_CASE("mesh graph edge counts") {
  TriangleMesh tri;
  tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  tri.faces = {{0, 1, 2}};
  CHECK(build_mesh_graph(tri).edge_count() == 3);

  TriangleMesh quad = tri;
  quad.vertices.emplace_back(1, 1, 0);
  quad.faces.push_back({1, 3, 2});
  CHECK(build_mesh_graph(quad).edge_count() == 5);

  CHECK(build_mesh_graph(TriangleMesh{}).vertex_count() == 0);
}

TEST_CASE("tetrahedron graph weights equal pairwise distances") {
  const auto m = testing_helpers::tetrahedron();
  const auto g = build_mesh_graph(m);
  CHECK(g.edge_count() == 6);
  for (std::size_t a = 0; a < 4; ++a) {
    for (const auto& e : g.adjacency[a]) {
      CHECK(e.length == doctest::Approx((m.vertices[a] - m.vertices[e.to]).norm()).epsilon(1e-15));
      // Symmetric storage.
      const auto& back = g.adjacency[e.to];
      CHECK(std::any_of(back.begin(), back.end(), [&](const GraphEdge& x) {
        return x.to == static_cast<int>(a) && x.length == e.length;
      }));
    }
  }
}

TEST_CASE("dijkstra on a unit path, with and without cutoff") {
  const auto g = make_graph(4, testing_helpers::path_edges(4));
  const auto all = dijkstra_geodesics(g, 0);
  CHECK(all == GeodesicMap{{0, 0.0}, {1, 1.0}, {2, 2.0}, {3, 3.0}});
  const auto cut = dijkstra_geodesics(g, 0, 1.5);
  CHECK(cut == GeodesicMap{{0, 0.0}, {1, 1.0}});
  CHECK_THROWS_AS(dijkstra_geodesics(g, 4), Error);
}

TEST_CASE("dijkstra matches Bellman-Ford on a weighted grid") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  std::vector<testing_helpers::WeightedEdge> edges;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const int v = r * 4 + c;
      if (c + 1 < 4) edges.emplace_back(v, v + 1, w(rng));
      if (r + 1 < 4) edges.emplace_back(v, v + 4, w(rng));
    }
  const auto g = make_graph(16, edges);
  for (int s = 0; s < 16; ++s) {
    const auto expect = oracle::bellman_ford(16, edges, s);
    const auto got = dijkstra_all(g, s);
    for (int v = 0; v < 16; ++v) CHECK(got[v] == expect[v]);
  }
}

TEST_CASE("dijkstra distances satisfy the triangle inequality on every edge") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  std::uniform_int_distribution<int> pick(0, 79);
  std::vector<testing_helpers::WeightedEdge> edges = testing_helpers::path_edges(80, 0.5);
  for (int k = 0; k < 150; ++k) {
    const int a = pick(rng), b = pick(rng);
    if (a != b) edges.emplace_back(a, b, w(rng));
  }
  const auto g = make_graph(80, edges);
  for (int s = 0; s < 80; s += 7) {
    const auto d = dijkstra_all(g, s);
    for (std::size_t b = 0; b < g.adjacency.size(); ++b)
      for (const auto& e : g.adjacency[b]) CHECK(d[e.to] <= d[b] + e.length + 1e-15);
  }
}

TEST_CASE("farthest point sampling basics") {
  std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK(farthest_point_sampling(line, 2, 0) == std::vector<int>{0, 3});
  const auto all = farthest_point_sampling(line, 4, 0);
  CHECK(all == std::vector<int>{0, 3, 1, 2});  // 1 and 2 tie at distance 1; lowest index first
  CHECK_THROWS_AS(farthest_point_sampling(line, 5, 0), Error);
  CHECK_THROWS_AS(farthest_point_sampling(line, 2, 9), Error);
}

TEST_CASE("farthest point sampling matches an exhaustive greedy oracle") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const auto picked = farthest_point_sampling(pts, 5, 0);
  REQUIRE(picked.size() == 5);
  CHECK(picked[0] == 0);
  auto dist_to_set = [&](int v, std::size_t upto) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < upto; ++k) best = std::min(best, (pts[v] - pts[picked[k]]).norm());
    return best;
  };
  for (std::size_t k = 1; k < picked.size(); ++k) {
    // Exhaustive: the pick is the farthest point from the previous picks.
    const double chosen = dist_to_set(picked[k], k);
    for (int v = 0; v < 50; ++v) CHECK(dist_to_set(v, k) <= chosen);
  }
  // Every unselected point is nearer to the final set than the last pick was.
  const double last = dist_to_set(picked.back(), picked.size() - 1);
  for (int v = 0; v < 50; ++v) {
    if (std::find(picked.begin(), picked.end(), v) == picked.end()) {
      CHECK(dist_to_set(v, picked.size()) <= last);
    }
  }
}

TEST_CASE("farthest point sampling is stable under input permutation") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> pts;
  for (int i = 0; i < 40; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Vec3> shuffled(40);
  int start = -1;
  for (int i = 0; i < 40; ++i) {
    shuffled[i] = pts[perm[i]];
    if (perm[i] == 0) start = i;
  }
  const auto a = farthest_point_sampling(pts, 10, 0);
  const auto b = farthest_point_sampling(shuffled, 10, start);
  for (int k = 0; k < 10; ++k) CHECK(pts[a[k]] == shuffled[b[k]]);
}

TEST_CASE("surface area") {
  TriangleMesh tri;
  tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  tri.faces = {{0, 1, 2}};
  CHECK(surface_area(tri) == doctest::Approx(0.5).epsilon(1e-15));
  tri.vertices.emplace_back(1, 1, 0);
  tri.faces.push_back({1, 3, 2});
  CHECK(surface_area(tri) == doctest::Approx(1.0).epsilon(1e-15));
  tri.faces.push_back({0, 0, 1});  // degenerate
  CHECK(surface_area(tri) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("icosahedron area matches the closed form") {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : m.vertices) v.normalize();  // circumradius 1
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  const double a = (m.vertices[0] - m.vertices[1]).norm();
  CHECK(surface_area(m) == doctest::Approx(5.0 * std::sqrt(3.0) * a * a).epsilon(1e-12));
}
