// SPDX-License-Identifier: Apache-2.0
#include "formats.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace bg::formats {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot open " + path.string());
  return in;
}

// Next line that is neither blank nor a comment.
bool next_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

[[noreturn]] void parse_error(const char* what, int line_no, const std::string& msg) {
  fail(ErrorCode::Parse, std::string(what) + " line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void write_match_set(const got::MatchSet& matches, std::ostream& out) {
  out << "# bendgraph matches: source target confidence mutual\n";
  out << "seeds " << matches.n << "\n";
  out << "mode " << got::to_string(matches.mode) << "\n";
  out << "matches " << matches.pairs.size() << "\n";
  for (const auto& m : matches.pairs) {
    out << m.source << ' ' << m.target << ' ' << format_double(m.confidence) << ' '
        << (m.mutual ? 1 : 0) << '\n';
  }
}

got::MatchSet read_match_set(std::istream& in) {
  got::MatchSet set;
  std::string line;
  int line_no = 0;
  auto header = [&](const char* key) {
    if (!next_line(in, line, line_no)) parse_error("matches", line_no, "unexpected end of file");
    std::istringstream ls(line);
    std::string name;
    std::string value;
    if (!(ls >> name >> value) || name != key) {
      parse_error("matches", line_no, std::string("expected '") + key + " <value>'");
    }
    return value;
  };
  auto integer = [&](const std::string& text) {
    long v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || v < 0) {
      parse_error("matches", line_no, "expected a non-negative integer, got '" + text + "'");
    }
    return v;
  };
  set.n = static_cast<int>(integer(header("seeds")));
  set.mode = got::match_mode_from_string(header("mode"));
  const long count = integer(header("matches"));
  for (long k = 0; k < count; ++k) {
    if (!next_line(in, line, line_no)) parse_error("matches", line_no, "missing match lines");
    std::istringstream ls(line);
    got::Match m{};
    int mutual = 0;
    if (!(ls >> m.source >> m.target >> m.confidence >> mutual)) {
      parse_error("matches", line_no, "expected 'source target confidence mutual'");
    }
    m.mutual = mutual != 0;
    set.pairs.push_back(m);
  }
  return set;
}

void save_match_set(const got::MatchSet& matches, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_match_set(matches, out);
}

got::MatchSet load_match_set(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_match_set(in);
}

void write_shape_graph(const hiergraph::ShapeGraph& graph, std::ostream& out) {
  out << "# bendgraph shape graph\n";
  out << "nodes " << graph.size() << "\n";
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& p = graph.positions[i];
    out << i << ' ' << format_double(p.x()) << ' '
        << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  }
  out << "edges " << graph.edges.size() << "\n";
  for (const auto& e : graph.edges) {
    out << e.a << ' ' << e.b << ' ' << format_double(e.weight) << '\n';
  }
}

void save_shape_graph(const hiergraph::ShapeGraph& graph, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_shape_graph(graph, out);
}

void write_correspondence(std::span<const int> correspondence, std::ostream& out) {
  for (std::size_t v = 0; v < correspondence.size(); ++v) {
    if (correspondence[v] >= 0) out << v << ' ' << correspondence[v] << '\n';
  }
}

std::vector<int> read_correspondence(std::istream& in, std::size_t source_vertices) {
  std::vector<int> corr(source_vertices, -1);
  std::string line;
  int line_no = 0;
  while (next_line(in, line, line_no)) {
    std::istringstream ls(line);
    long src = 0, dst = 0;
    std::string extra;
    if (!(ls >> src >> dst) || (ls >> extra)) {
      parse_error("correspondence", line_no, "expected 'src_idx dst_idx'");
    }
    if (src < 0 || static_cast<std::size_t>(src) >= source_vertices || dst < 0) {
      parse_error("correspondence", line_no, "index out of range");
    }
    corr[static_cast<std::size_t>(src)] = static_cast<int>(dst);
  }
  return corr;
}

void save_dataset(std::span<const synthetic::ShapePairSample> samples,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto manifest = open_out(dir / "manifest.txt");
  manifest << "# name bend_angle twist_rate bump_amplitude bump_width bump_vertex\n";
  for (const auto& s : samples) {
    if (s.name.empty() || s.name.find_first_of(" \t\n/") != std::string::npos) {
      fail(ErrorCode::InvalidArgument, "sample names must be non-empty and contain no spaces or '/'");
    }
    mesh::save_off(s.mesh_a, dir / (s.name + "_A.off"));
    mesh::save_off(s.mesh_b, dir / (s.name + "_B.off"));
    auto corr = open_out(dir / (s.name + ".corr"));
    write_correspondence(s.correspondence, corr);
    const auto& d = s.deformation;
    manifest << s.name << ' ' << format_double(d.bend_angle) << ' ' << format_double(d.twist_rate)
             << ' ' << format_double(d.bump_amplitude) << ' ' << format_double(d.bump_width)
             << ' ' << d.bump_vertex << '\n';
  }
}

std::vector<synthetic::ShapePairSample> load_dataset(const std::filesystem::path& dir) {
  auto manifest = open_in(dir / "manifest.txt");
  std::vector<synthetic::ShapePairSample> out;
  std::string line;
  int line_no = 0;
  while (next_line(manifest, line, line_no)) {
    std::istringstream ls(line);
    synthetic::ShapePairSample s;
    auto& d = s.deformation;
    if (!(ls >> s.name >> d.bend_angle >> d.twist_rate >> d.bump_amplitude >> d.bump_width >>
          d.bump_vertex)) {
      parse_error("manifest", line_no, "expected 'name bend twist bump width vertex'");
    }
    s.mesh_a = mesh::load_mesh_file(dir / (s.name + "_A.off"));
    s.mesh_b = mesh::load_mesh_file(dir / (s.name + "_B.off"));
    auto corr = open_in(dir / (s.name + ".corr"));
    s.correspondence = read_correspondence(corr, s.mesh_a.vertices.size());
    for (int c : s.correspondence) {
      if (c >= static_cast<int>(s.mesh_b.vertices.size())) {
        fail(ErrorCode::Parse, s.name + ".corr: target index exceeds the B mesh");
      }
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "dataset " + dir.string() + " is empty");
  return out;
}

}  // namespace bg::formats
