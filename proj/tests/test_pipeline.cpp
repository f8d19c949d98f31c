// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "config.hpp"
#include "doctest.h"
#include "error.hpp"
#include "evaluate.hpp"
#include "formats.hpp"
#include "helpers.hpp"
#include "model.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "train.hpp"

using namespace bg;
using synthetic::BaseShape;
using synthetic::Deformation;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.seeds = 8;
  c.feature_dim = 8;
  c.tag_widths = {4, 8, 8};
  c.d_cut = 2;
  c.local_radius = 0.15;
  c.shape_radius = 1.0;
  c.soft_radius = 0.5;
  c.epochs = 1;
  c.frequencies = 4;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bendgraph_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("zero deformation reproduces the base mesh") {
  diff::Rng rng(1);
  const auto pair = synthetic::generate_synthetic_pair(BaseShape::Cylinder, 24, Deformation{}, rng);
  CHECK(pair.mesh_a.vertices.size() >= 500);
  CHECK(pair.mesh_a.vertices == pair.mesh_b.vertices);
  CHECK(pair.mesh_a.faces == pair.mesh_b.faces);
  REQUIRE(pair.correspondence.size() == pair.mesh_a.vertices.size());
  for (std::size_t v = 0; v < pair.correspondence.size(); ++v) CHECK(pair.correspondence[v] == static_cast<int>(v));
}

TEST_CASE("twisting preserves each vertex's distance from the axis") {
  for (auto base : {BaseShape::Cylinder, BaseShape::Sphere, BaseShape::Bar}) {
    const auto mesh = synthetic::make_base_mesh(base, 24);
    Deformation d;
    d.twist_rate = 2.5;
    const auto twisted = synthetic::deform(mesh, d);
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      CHECK(std::abs(twisted.vertices[v].head<2>().norm() - mesh.vertices[v].head<2>().norm()) < 1e-9);
      CHECK(twisted.vertices[v].z() == mesh.vertices[v].z());
    }
  }
}

TEST_CASE("bending by a right angle maps the axis ends onto the arc") {
  const auto mesh = synthetic::make_base_mesh(BaseShape::Cylinder, 24);
  Deformation d;
  d.bend_angle = std::numbers::pi / 2;
  const auto bent = synthetic::deform(mesh, d);
  const std::size_t n = mesh.vertices.size();
  // Arc of length 2 turning by pi/2: radius 4/pi, half-angle pi/4 per end.
  const double r = 4.0 / std::numbers::pi, half = std::numbers::pi / 4;
  const Vec3 top(r - r * std::cos(half), 0.0, r * std::sin(half));
  const Vec3 bottom(r - r * std::cos(half), 0.0, -r * std::sin(half));
  REQUIRE(mesh.vertices[n - 2].head<2>().norm() == 0.0);
  const Vec3& first = bent.vertices[n - 2];
  const Vec3& second = bent.vertices[n - 1];
  const bool first_is_bottom = mesh.vertices[n - 2].z() < 0;
  CHECK(((first_is_bottom ? bottom : top) - first).norm() < 1e-12);
  CHECK(((first_is_bottom ? top : bottom) - second).norm() < 1e-12);
}

TEST_CASE("synthetic pairs reject out-of-range deformations") {
  diff::Rng rng(2);
  Deformation bend;
  bend.bend_angle = 3.2;
  CHECK_THROWS_AS(synthetic::generate_synthetic_pair(BaseShape::Cylinder, 24, bend, rng), bg::Error);
  Deformation twist;
  twist.twist_rate = 6.3;
  CHECK_THROWS_AS(synthetic::generate_synthetic_pair(BaseShape::Cylinder, 24, twist, rng), bg::Error);
  CHECK_THROWS_AS(synthetic::make_base_mesh(BaseShape::Cylinder, 4), bg::Error);
  CHECK(synthetic::base_shape_from_string(synthetic::to_string(BaseShape::Bar)) == BaseShape::Bar);
  CHECK_THROWS_AS(synthetic::base_shape_from_string("torus"), bg::Error);
}

TEST_CASE("generated pairs are normalized, deterministic and within range") {
  synthetic::DatasetSpec spec;
  spec.count = 3;
  spec.resolution = 24;
  spec.bump_max = 0.05;
  spec.twist_max = 0.5;
  const auto a = synthetic::generate_dataset(spec);
  const auto b = synthetic::generate_dataset(spec);
  REQUIRE(a.size() == 3);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].name == "pair_000" + std::to_string(k));
    CHECK(a[k].mesh_b.vertices == b[k].mesh_b.vertices);
    CHECK(a[k].deformation.bend_angle >= spec.bend_min);
    CHECK(a[k].deformation.bend_angle <= spec.bend_max);
    CHECK(std::abs(a[k].deformation.twist_rate) <= spec.twist_max);
    double radius = 0.0;
    for (const auto& v : a[k].mesh_b.vertices) radius = std::max(radius, v.norm());
    CHECK(radius <= 1.0 + 1e-12);
  }
}

TEST_CASE("config text round-trips every key") {
  TrainConfig c = tiny_config();
  c.temperature = 0.123456789012345;
  c.cut_metric = hiergraph::CutMetric::Geodesic;
  c.match_mode = got::MatchMode::RowArgmax;
  c.augment_rotation = false;
  const TrainConfig back = TrainConfig::from_text(c.to_text());
  for (const auto& key : TrainConfig::keys()) CHECK(back.get(key) == c.get(key));
  CHECK(back.temperature == c.temperature);
  CHECK_THROWS_AS(TrainConfig::from_text("no_such_key = 1\n"), bg::Error);
  CHECK_THROWS_AS(TrainConfig::from_text("seeds = many\n"), bg::Error);
  CHECK_THROWS_AS(TrainConfig::from_text("seeds = 0\n"), bg::Error);
  CHECK_THROWS_AS(TrainConfig::from_text("just text\n"), bg::Error);
  const TrainConfig commented = TrainConfig::from_text("# note\n  seeds = 12  # trailing\n\n");
  CHECK(commented.seeds == 12);
}

TEST_CASE("config defaults and schedules") {
  const TrainConfig c;
  CHECK(c.seeds == 200);
  CHECK(c.d_cut == 7);
  CHECK(c.feature_dim == 64);
  CHECK(c.learning_rate(1) == 1e-3);
  CHECK(c.learning_rate(30) == 1e-3);
  CHECK(c.learning_rate(31) == 1e-4);
  CHECK(c.negative_ring() == std::pair{14, 28});
  const auto schedule = c.loss_schedule();
  CHECK(schedule.at(30).matching == 0.0);
  CHECK(schedule.at(31).matching == 1.0);
  CHECK(schedule.at(31).descriptor == 0.1);
}

TEST_CASE("match sets, correspondences and shape graphs in text form") {
  got::MatchSet set;
  set.mode = got::MatchMode::Mutual;
  set.n = 5;
  set.pairs = {{0, 3, 0.75, true}, {2, 1, 0.1234567890123, true}};
  std::stringstream text;
  formats::write_match_set(set, text);
  const auto back = formats::read_match_set(text);
  CHECK(back.n == 5);
  CHECK(back.mode == got::MatchMode::Mutual);
  REQUIRE(back.pairs.size() == 2);
  CHECK(back.pairs[1].target == 1);
  CHECK(back.pairs[1].confidence == set.pairs[1].confidence);
  std::stringstream broken("seeds 2\nmode mutual\nmatches 3\n0 1 0.5 1\n");
  CHECK_THROWS_AS(formats::read_match_set(broken), bg::Error);

  const std::vector<int> corr{2, 0, 1, -1};
  std::stringstream c;
  formats::write_correspondence(corr, c);
  CHECK(formats::read_correspondence(c, 4) == corr);

  hiergraph::ShapeGraph g;
  g.seeds = {4, 9};
  g.positions = {{0.5, 0.0, -0.25}, {1.0, 2.0, 3.0}};
  g.edges = {{0, 1, 0.75}};
  std::stringstream dump;
  formats::write_shape_graph(g, dump);
  const std::string s = dump.str();
  CHECK(s.find("nodes 2\n0 0.5 0 -0.25\n1 1 2 3\nedges 1\n0 1 0.75\n") != std::string::npos);
}

TEST_CASE("datasets survive a save and load") {
  synthetic::DatasetSpec spec;
  spec.count = 2;
  spec.resolution = 24;
  const auto data = synthetic::generate_dataset(spec);
  const auto dir = scratch("dataset");
  formats::save_dataset(data, dir);
  const auto back = formats::load_dataset(dir);
  REQUIRE(back.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(back[k].name == data[k].name);
    CHECK(back[k].correspondence == data[k].correspondence);
    CHECK(back[k].mesh_b.faces == data[k].mesh_b.faces);
    CHECK(back[k].deformation.bend_angle == data[k].deformation.bend_angle);
    for (std::size_t v = 0; v < data[k].mesh_b.vertices.size(); ++v) {
      CHECK((back[k].mesh_b.vertices[v] - data[k].mesh_b.vertices[v]).norm() == 0.0);
    }
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(formats::load_dataset(dir), bg::Error);
}

TEST_CASE("one training epoch on a tiny config is finite and repeatable") {
  synthetic::DatasetSpec spec;
  spec.count = 1;
  spec.resolution = 24;
  const auto data = synthetic::generate_dataset(spec);
  TrainConfig c = tiny_config();
  int checkpoints = 0;
  const auto first = train::train(c, data, [&](int epoch, const diff::ParameterStore&) {
    CHECK(epoch == 1);
    ++checkpoints;
  });
  CHECK(checkpoints == 1);
  REQUIRE(first.log.size() == 1);
  const auto& row = first.log[0];
  CHECK(std::isfinite(row.descriptor_loss));
  CHECK(std::isfinite(row.matching_loss));
  CHECK(std::isfinite(row.regularization_loss));
  CHECK(std::isfinite(row.total));
  CHECK(row.weights.descriptor == 1.0);
  CHECK(row.learning_rate == 1e-3);
  const auto second = train::train(c, data);
  CHECK(first.params.checksum() == second.params.checksum());
  CHECK(train::format_log_row(first.log[0]) == train::format_log_row(second.log[0]));
  CHECK(train::log_header().rfind("epoch\tstep\tL_D\tL_M\tL_R\ttotal", 0) == 0);
  CHECK_THROWS_AS(train::train(c, std::span<const synthetic::ShapePairSample>{}), bg::Error);
}

TEST_CASE("random rotations are proper orthogonal") {
  diff::Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto r = train::random_rotation(rng);
    CHECK((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0));
  }
}

TEST_CASE("matching a shape with itself gives zero error and full bijectivity") {
  diff::Rng rng(4);
  auto pair = synthetic::generate_synthetic_pair(BaseShape::Cylinder, 24, Deformation{}, rng);
  TrainConfig c = tiny_config();
  c.seeds = 16;
  const MatchingModel model(c);
  auto params = model.create_parameters(11);
  const auto report = evaluate::evaluate_pair(model, params, pair);
  CHECK(report.error == 0.0);
  CHECK(report.bijectivity == 100.0);
  CHECK(report.mutual == 16);
}

TEST_CASE("evaluation scores a uniform plan by the tie rule") {
  diff::Rng rng(5);
  const auto pair = synthetic::generate_synthetic_pair(BaseShape::Cylinder, 24, Deformation{}, rng);
  TrainConfig c = tiny_config();
  const ShapeContext a = prepare_shape(pair.mesh_a, c), b = prepare_shape(pair.mesh_b, c);
  const Matrix uniform = Matrix::Constant(8, 8, std::log(1.0 / 64.0));
  const auto report = evaluate::score_plan(uniform, a, b, pair.correspondence);
  const auto expected = oracle::double_argmax(testing_helpers::to_grid(uniform));
  CHECK(report.mutual == static_cast<int>(expected.size()));
  CHECK(report.bijectivity == doctest::Approx(100.0 * expected.size() / 8.0));
}

TEST_CASE("evaluation of a hand-built plan on a six-seed grid") {
  auto grid = testing_helpers::grid_mesh(4, 4, 1.0);  // area 9
  auto context = [&](const std::vector<int>& seeds) {
    ShapeContext s;
    s.mesh = grid;
    s.graph = mesh::build_mesh_graph(grid);
    s.seeds = seeds;
    return s;
  };
  const std::vector<int> seeds{0, 3, 12, 15, 5, 10};
  const ShapeContext a = context(seeds), b = context(seeds);
  std::vector<int> corr(16);
  std::iota(corr.begin(), corr.end(), 0);
  Matrix plan = Matrix::Constant(6, 6, -5.0);
  for (int i = 0; i < 4; ++i) plan(i, i) = -0.1;
  plan(4, 5) = -0.2;  // vertex 5 -> vertex 10, one diagonal
  plan(5, 0) = -0.5;  // vertex 10 -> vertex 0, two diagonals; column 0 prefers row 0
  const auto report = evaluate::score_plan(plan, a, b, corr);
  CHECK(report.error == doctest::Approx(3.0 * std::sqrt(2.0) / 6.0 / 3.0).epsilon(1e-14));
  CHECK(report.mutual == 5);
  CHECK(report.bijectivity == doctest::Approx(500.0 / 6.0));
}

TEST_CASE("evaluation error is unchanged by translating both meshes") {
  diff::Rng rng(6);
  Deformation d;
  d.bend_angle = 0.6;
  auto pair = synthetic::generate_synthetic_pair(BaseShape::Cylinder, 24, d, rng);
  TrainConfig c = tiny_config();
  c.seeds = 12;
  const MatchingModel model(c);
  auto params = model.create_parameters(3);
  const auto before = evaluate::evaluate_pair(model, params, pair);
  for (auto* m : {&pair.mesh_a, &pair.mesh_b})
    for (auto& v : m->vertices) v += Vec3(0.5, -0.25, 2.0);
  const auto after = evaluate::evaluate_pair(model, params, pair);
  CHECK(after.error == doctest::Approx(before.error).epsilon(1e-9));
  CHECK(after.mutual == before.mutual);
}

TEST_CASE("evaluation report text") {
  evaluate::EvalReport r;
  r.mean_error = 0.25;
  r.bijectivity_rate = 50;
  r.pairs.push_back({"p", 0.25, 50, 4, 8});
  std::stringstream out;
  evaluate::write_report(r, out);
  CHECK(out.str() == "name\terror\tbijectivity\tmutual\tseeds\np\t0.25\t50\t4\t8\nmean_error\t0.25\tbijectivity_rate\t50\n");
}
