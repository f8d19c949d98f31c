// SPDX-License-Identifier: Apache-2.0
#include "mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <utility>

#include "error.hpp"

namespace bg::mesh {
namespace {

// Splits a document into whitespace tokens per line, keeping line numbers
// for error messages. Blank lines and '#' comments are skipped.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::vector<std::string_view>& tokens) {
    while (pos_ < text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      std::string_view line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      tokens.clear();
      std::size_t i = 0;
      while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
      }
      if (!tokens.empty()) return true;
    }
    return false;
  }

  int line() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_no_ = 0;
};

[[noreturn]] void parse_error(const char* format_name, int line,
                              const std::string& what) {
  fail(ErrorCode::Parse, std::string(format_name) + " line " +
                             std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view token, const char* format_name, int line) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    parse_error(format_name, line, "invalid number '" + std::string(token) + "'");
  }
  return value;
}

Face checked_face(std::span<const long long> idx, std::size_t vertex_count,
                  const char* format_name, int line) {
  Face face{};
  for (int k = 0; k < 3; ++k) {
    if (idx[k] < 0 || static_cast<std::size_t>(idx[k]) >= vertex_count) {
      parse_error(format_name, line,
                  "face index " + std::to_string(idx[k]) + " out of range");
    }
    face[k] = static_cast<int>(idx[k]);
  }
  return face;
}

TriangleMesh parse_off(std::string_view text) {
  constexpr const char* kName = "OFF";
  LineReader reader(text);
  std::vector<std::string_view> tok;
  if (!reader.next(tok) || tok[0] != "OFF") {
    parse_error(kName, reader.line(), "missing 'OFF' header");
  }
  // Counts may follow the keyword on the same line.
  std::vector<std::string_view> counts(tok.begin() + 1, tok.end());
  if (counts.empty()) {
    if (!reader.next(tok)) parse_error(kName, reader.line(), "missing counts line");
    counts = tok;
  }
  if (counts.size() < 2) parse_error(kName, reader.line(), "malformed counts line");
  const int count_line = reader.line();
  const auto nv = parse_number<long long>(counts[0], kName, count_line);
  const auto nf = parse_number<long long>(counts[1], kName, count_line);
  if (nv < 0 || nf < 0) parse_error(kName, count_line, "negative element count");

  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long long i = 0; i < nv; ++i) {
    if (!reader.next(tok)) {
      parse_error(kName, reader.line(),
                  "expected " + std::to_string(nv) + " vertices, found " +
                      std::to_string(i));
    }
    if (tok.size() < 3) parse_error(kName, reader.line(), "vertex needs 3 coordinates");
    mesh.vertices.emplace_back(parse_number<double>(tok[0], kName, reader.line()),
                               parse_number<double>(tok[1], kName, reader.line()),
                               parse_number<double>(tok[2], kName, reader.line()));
  }
  mesh.faces.reserve(static_cast<std::size_t>(nf));
  for (long long i = 0; i < nf; ++i) {
    if (!reader.next(tok)) {
      parse_error(kName, reader.line(),
                  "expected " + std::to_string(nf) + " faces, found " +
                      std::to_string(i));
    }
    const auto arity = parse_number<long long>(tok[0], kName, reader.line());
    if (arity != 3) {
      parse_error(kName, reader.line(),
                  "non-triangular face with " + std::to_string(arity) + " vertices");
    }
    if (tok.size() < 4) parse_error(kName, reader.line(), "face needs 3 indices");
    std::array<long long, 3> idx{};
    for (int k = 0; k < 3; ++k) idx[k] = parse_number<long long>(tok[1 + k], kName, reader.line());
    mesh.faces.push_back(checked_face(idx, mesh.vertices.size(), kName, reader.line()));
  }
  return mesh;
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  long long count = 0;
  std::vector<PlyProperty> properties;
};

TriangleMesh parse_ply(std::string_view text) {
  constexpr const char* kName = "PLY";
  LineReader reader(text);
  std::vector<std::string_view> tok;
  if (!reader.next(tok) || tok[0] != "ply") parse_error(kName, reader.line(), "missing 'ply' magic");
  std::vector<PlyElement> elements;
  bool have_format = false;
  while (true) {
    if (!reader.next(tok)) parse_error(kName, reader.line(), "unterminated header");
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") {
        parse_error(kName, reader.line(), "only 'format ascii 1.0' is supported");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) parse_error(kName, reader.line(), "malformed element line");
      elements.push_back({std::string(tok[1]),
                          parse_number<long long>(tok[2], kName, reader.line()), {}});
      if (elements.back().count < 0) parse_error(kName, reader.line(), "negative element count");
    } else if (tok[0] == "property") {
      if (elements.empty()) parse_error(kName, reader.line(), "property before element");
      if (tok.size() >= 5 && tok[1] == "list") {
        elements.back().properties.push_back({std::string(tok[4]), true});
      } else if (tok.size() == 3) {
        elements.back().properties.push_back({std::string(tok[2]), false});
      } else {
        parse_error(kName, reader.line(), "malformed property line");
      }
    } else if (tok[0] != "comment" && tok[0] != "obj_info") {
      parse_error(kName, reader.line(), "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_format) parse_error(kName, reader.line(), "missing format line");

  TriangleMesh mesh;
  bool have_vertices = false;
  for (const auto& element : elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";
    std::array<int, 3> xyz{-1, -1, -1};
    int index_list = -1;
    for (int p = 0; p < static_cast<int>(element.properties.size()); ++p) {
      const auto& prop = element.properties[p];
      if (is_vertex && !prop.is_list) {
        if (prop.name == "x") xyz[0] = p;
        if (prop.name == "y") xyz[1] = p;
        if (prop.name == "z") xyz[2] = p;
      }
      if (is_face && prop.is_list &&
          (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
        index_list = p;
      }
    }
    if (is_vertex && (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0)) {
      parse_error(kName, reader.line(), "vertex element lacks x/y/z properties");
    }
    if (is_face && index_list < 0) {
      parse_error(kName, reader.line(), "face element lacks vertex_indices list");
    }
    if (is_face && !have_vertices) {
      parse_error(kName, reader.line(), "face element precedes vertex element");
    }
    for (long long row = 0; row < element.count; ++row) {
      if (!reader.next(tok)) {
        parse_error(kName, reader.line(),
                    "expected " + std::to_string(element.count) + " " + element.name +
                        " rows, found " + std::to_string(row));
      }
      std::size_t cursor = 0;
      auto take = [&]() -> std::string_view {
        if (cursor >= tok.size()) parse_error(kName, reader.line(), "row too short");
        return tok[cursor++];
      };
      Vec3 position = Vec3::Zero();
      for (int p = 0; p < static_cast<int>(element.properties.size()); ++p) {
        const auto& prop = element.properties[p];
        if (prop.is_list) {
          const auto n = parse_number<long long>(take(), kName, reader.line());
          if (n < 0) parse_error(kName, reader.line(), "negative list length");
          if (p == index_list) {
            if (n != 3) {
              parse_error(kName, reader.line(),
                          "non-triangular face with " + std::to_string(n) + " vertices");
            }
            std::array<long long, 3> idx{};
            for (int k = 0; k < 3; ++k) idx[k] = parse_number<long long>(take(), kName, reader.line());
            mesh.faces.push_back(checked_face(idx, mesh.vertices.size(), kName, reader.line()));
          } else {
            for (long long k = 0; k < n; ++k) take();
          }
        } else {
          const std::string_view value = take();
          for (int axis = 0; axis < 3; ++axis) {
            if (is_vertex && p == xyz[axis]) {
              position[axis] = parse_number<double>(value, kName, reader.line());
            }
          }
        }
      }
      if (is_vertex) mesh.vertices.push_back(position);
    }
    if (is_vertex) have_vertices = true;
  }
  return mesh;
}

}  // namespace

TriangleMesh load_mesh(std::string_view bytes, MeshFormat format) {
  return format == MeshFormat::Off ? parse_off(bytes) : parse_ply(bytes);
}

TriangleMesh load_mesh_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot open mesh file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  MeshFormat format;
  if (ext == ".off") {
    format = MeshFormat::Off;
  } else if (ext == ".ply") {
    format = MeshFormat::PlyAscii;
  } else {
    fail(ErrorCode::InvalidArgument, "unknown mesh extension '" + ext + "' for " + path.string());
  }
  try {
    return load_mesh(buffer.str(), format);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::string write_off(const TriangleMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  return out.str();
}

void save_off(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << write_off(mesh);
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

TriangleMesh normalize_to_unit_ball(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) fail(ErrorCode::InvalidArgument, "cannot normalize an empty mesh");
  Vec3 centroid = Vec3::Zero();
  for (const auto& v : mesh.vertices) centroid += v;
  centroid /= static_cast<double>(mesh.vertices.size());
  double radius = 0.0;
  for (const auto& v : mesh.vertices) radius = std::max(radius, (v - centroid).norm());
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    fail(ErrorCode::DegenerateGeometry, "all vertices coincide; cannot normalize");
  }
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = (v - centroid) / radius;
  return out;
}

std::size_t MeshGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& nbrs : adjacency) twice += nbrs.size();
  return twice / 2;
}

MeshGraph build_mesh_graph(const TriangleMesh& mesh) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      if (a == b) continue;
      pairs.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  MeshGraph graph;
  graph.adjacency.resize(mesh.vertices.size());
  for (auto [a, b] : pairs) {
    const double len = (mesh.vertices[a] - mesh.vertices[b]).norm();
    graph.adjacency[a].push_back({b, len});
    graph.adjacency[b].push_back({a, len});
  }
  for (auto& nbrs : graph.adjacency) {
    std::sort(nbrs.begin(), nbrs.end(),
              [](const GraphEdge& x, const GraphEdge& y) { return x.to < y.to; });
  }
  return graph;
}

namespace {

void check_source(const MeshGraph& graph, int source) {
  if (source < 0 || static_cast<std::size_t>(source) >= graph.vertex_count()) {
    fail(ErrorCode::InvalidArgument,
         "source vertex " + std::to_string(source) + " out of range");
  }
}

template <typename Visit>
void run_dijkstra(const MeshGraph& graph, int source, double cutoff,
                  std::vector<double>& dist, Visit&& visit) {
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist.assign(graph.vertex_count(), std::numeric_limits<double>::infinity());
  dist[source] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    visit(u, d);
    for (const auto& e : graph.adjacency[u]) {
      const double nd = d + e.length;
      if (nd < dist[e.to] && nd <= cutoff) {
        dist[e.to] = nd;
        queue.push({nd, e.to});
      }
    }
  }
}

}  // namespace

GeodesicMap dijkstra_geodesics(const MeshGraph& graph, int source,
                               std::optional<double> cutoff) {
  check_source(graph, source);
  if (cutoff && !(*cutoff >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "geodesic cutoff must be non-negative");
  }
  GeodesicMap result;
  std::vector<double> dist;
  run_dijkstra(graph, source, cutoff.value_or(std::numeric_limits<double>::infinity()),
               dist, [&](int u, double d) { result.emplace(u, d); });
  return result;
}

std::vector<double> dijkstra_all(const MeshGraph& graph, int source) {
  check_source(graph, source);
  std::vector<double> dist;
  run_dijkstra(graph, source, std::numeric_limits<double>::infinity(), dist,
               [](int, double) {});
  return dist;
}

std::vector<int> hop_distances(const MeshGraph& graph, int source, int max_hops) {
  check_source(graph, source);
  std::vector<int> hops(graph.vertex_count(), -1);
  std::queue<int> frontier;
  hops[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    if (hops[u] >= max_hops) continue;
    for (const auto& e : graph.adjacency[u]) {
      if (hops[e.to] < 0) {
        hops[e.to] = hops[u] + 1;
        frontier.push(e.to);
      }
    }
  }
  return hops;
}

std::vector<int> farthest_point_sampling(std::span<const Vec3> points,
                                         std::size_t count, int start) {
  if (count > points.size()) {
    fail(ErrorCode::InvalidArgument,
         "cannot sample " + std::to_string(count) + " of " +
             std::to_string(points.size()) + " points");
  }
  if (count == 0) return {};
  if (start < 0 || static_cast<std::size_t>(start) >= points.size()) {
    fail(ErrorCode::InvalidArgument, "start index out of range");
  }
  std::vector<int> picked{start};
  picked.reserve(count);
  std::vector<double> nearest(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    nearest[i] = (points[i] - points[start]).squaredNorm();
  }
  // Picked points are pinned below every real distance so duplicates of a
  // picked position can still be selected.
  nearest[start] = -1.0;
  while (picked.size() < count) {
    int best = -1;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (nearest[i] > best_dist) {
        best_dist = nearest[i];
        best = static_cast<int>(i);
      }
    }
    picked.push_back(best);
    nearest[best] = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], (points[i] - points[best]).squaredNorm());
    }
  }
  return picked;
}

double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    area += 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
  }
  return area;
}

}  // namespace bg::mesh
