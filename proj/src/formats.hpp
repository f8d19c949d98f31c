// SPDX-License-Identifier: Apache-2.0
//
// Text formats exchanged with the outside world. docs/FORMATS.md describes
// each one.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "got.hpp"
#include "hiergraph.hpp"
#include "synthetic.hpp"

namespace bg::formats {

void write_match_set(const got::MatchSet& matches, std::ostream& out);
got::MatchSet read_match_set(std::istream& in);
void save_match_set(const got::MatchSet& matches, const std::filesystem::path& path);
got::MatchSet load_match_set(const std::filesystem::path& path);

void write_shape_graph(const hiergraph::ShapeGraph& graph, std::ostream& out);
void save_shape_graph(const hiergraph::ShapeGraph& graph, const std::filesystem::path& path);

/// "src_idx dst_idx" per line. Unlisted source vertices map to -1.
void write_correspondence(std::span<const int> correspondence, std::ostream& out);
std::vector<int> read_correspondence(std::istream& in, std::size_t source_vertices);

/// <dir>/manifest.txt plus <name>_A.off, <name>_B.off and <name>.corr per pair.
void save_dataset(std::span<const synthetic::ShapePairSample> samples,
                  const std::filesystem::path& dir);
std::vector<synthetic::ShapePairSample> load_dataset(const std::filesystem::path& dir);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace bg::formats
