// SPDX-License-Identifier: Apache-2.0
#include "train.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "error.hpp"
#include "formats.hpp"
#include "hiergraph.hpp"
#include "losses.hpp"
#include "model.hpp"

namespace bg::train {
namespace {

// Fixed per-sample preprocessing. Rotation augmentation rotates copies of
// these, since seeds, graphs and geodesics do not depend on orientation.
struct Prepared {
  const synthetic::ShapePairSample* sample;
  ShapeContext a;
  ShapeContext b;
  std::vector<int> positive_vertices;
  std::vector<hiergraph::LocalGraph> positives;
  Matrix soft_weights;
};

Prepared prepare(const synthetic::ShapePairSample& sample, const TrainConfig& config) {
  if (sample.correspondence.size() != sample.mesh_a.vertices.size()) {
    fail(ErrorCode::InvalidArgument, "sample " + sample.name + ": correspondence must cover every A vertex");
  }
  Prepared p{&sample, prepare_shape(sample.mesh_a, config), prepare_shape(sample.mesh_b, config),
             {}, {}, {}};
  for (int s : p.a.seeds) {
    const int image = sample.correspondence[s];
    if (image < 0 || static_cast<std::size_t>(image) >= p.b.mesh.vertices.size()) {
      fail(ErrorCode::InvalidArgument,
           "sample " + sample.name + ": seed vertex " + std::to_string(s) + " has no image on B");
    }
    p.positive_vertices.push_back(image);
  }
  p.positives = local_graphs_at(p.b, p.positive_vertices, config);
  const Matrix geodesics = hiergraph::bipartite_geodesic_matrix(sample.correspondence, p.a.seeds,
                                                                p.b.seeds, p.b.graph);
  p.soft_weights = losses::soft_weight_matrix(geodesics, config.soft_radius);
  return p;
}

void rotate_graphs(std::vector<hiergraph::LocalGraph>& graphs, const Eigen::Matrix3d& r) {
  for (auto& g : graphs) {
    for (auto& n : g.nodes) n.coord = r * n.coord;
  }
}

void rotate_shape(ShapeContext& shape, const Eigen::Matrix3d& r) {
  for (auto& v : shape.mesh.vertices) v = r * v;
  for (auto& p : shape.shape_graph.positions) p = r * p;
  rotate_graphs(shape.local_graphs, r);
}

std::string describe(const LogRow& row, const std::string& name) {
  std::ostringstream out;
  out << "non-finite loss at epoch " << row.epoch << ", step " << row.step << ", sample '" << name
      << "': L_D=" << row.descriptor_loss << " L_M=" << row.matching_loss
      << " L_R=" << row.regularization_loss << " total=" << row.total;
  return out.str();
}

}  // namespace

std::string log_header() {
  return "epoch\tstep\tL_D\tL_M\tL_R\ttotal\tgamma_D\tgamma_M\tgamma_R\tlr";
}

std::string format_log_row(const LogRow& row) {
  using formats::format_double;
  std::string out = std::to_string(row.epoch) + '\t' + std::to_string(row.step);
  for (double v : {row.descriptor_loss, row.matching_loss, row.regularization_loss, row.total,
                   row.weights.descriptor, row.weights.matching, row.weights.regularization,
                   row.learning_rate}) {
    out += '\t' + format_double(v);
  }
  return out;
}

double TrainResult::epoch_mean_total(int epoch) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& row : log) {
    if (row.epoch == epoch) {
      sum += row.total;
      ++count;
    }
  }
  if (count == 0) fail(ErrorCode::InvalidArgument, "no log rows for epoch " + std::to_string(epoch));
  return sum / count;
}

Eigen::Matrix3d random_rotation(diff::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-9);
  return q.normalized().toRotationMatrix();
}

TrainResult train(const TrainConfig& config, std::span<const synthetic::ShapePairSample> dataset,
                  const CheckpointSink& checkpoint, const LogSink& log) {
  config.validate();
  if (dataset.empty()) fail(ErrorCode::InvalidArgument, "training needs a non-empty dataset");

  const MatchingModel model(config);
  TrainResult result{model.create_parameters(config.rng_seed), {}};
  diff::Rng rng(config.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  const auto schedule = config.loss_schedule();
  const auto [ring_min, ring_max] = config.negative_ring();

  std::vector<Prepared> prepared;
  prepared.reserve(dataset.size());
  for (const auto& sample : dataset) prepared.push_back(prepare(sample, config));

  std::vector<std::size_t> order(prepared.size());
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = config.learning_rate(epoch);
    for (std::size_t idx : order) {
      const Prepared& p = prepared[idx];
      ShapeContext a = p.a;
      ShapeContext b = p.b;
      std::vector<hiergraph::LocalGraph> positives = p.positives;
      std::vector<int> negative_vertices;
      negative_vertices.reserve(p.positive_vertices.size());
      for (int v : p.positive_vertices) {
        negative_vertices.push_back(hiergraph::mine_hard_negative(b.graph, v, ring_min, ring_max, rng));
      }
      auto negatives = local_graphs_at(b, negative_vertices, config);
      if (config.augment_rotation) {
        rotate_shape(a, random_rotation(rng));
        const Eigen::Matrix3d rb = random_rotation(rng);
        rotate_shape(b, rb);
        rotate_graphs(positives, rb);
        rotate_graphs(negatives, rb);
      }

      diff::Tape tape;
      ForwardResult fwd = model.forward(tape, result.params, a, b);
      diff::Var pos = model.descriptor().local_descriptors(tape, result.params, positives);
      diff::Var neg = model.descriptor().local_descriptors(tape, result.params, negatives);
      diff::Var l_d = losses::triplet_loss(fwd.descriptors_a, pos, neg, config.margin);
      diff::Var l_m = losses::matching_loss(fwd.got.log_plan, p.soft_weights);
      diff::Var pred = losses::softpool_positions(fwd.got.log_plan, b.seed_position_matrix());
      diff::Var l_r = losses::regularization_loss(pred, a.seed_position_matrix(), a.shape_graph.edges);
      diff::Var total = losses::total_loss(l_d, l_m, l_r, schedule, epoch);

      LogRow row;
      row.epoch = epoch;
      row.step = ++step;
      row.descriptor_loss = l_d.item();
      row.matching_loss = l_m.item();
      row.regularization_loss = l_r.item();
      row.total = total.item();
      row.weights = schedule.at(epoch);
      row.learning_rate = lr;
      if (!std::isfinite(row.descriptor_loss) || !std::isfinite(row.matching_loss) ||
          !std::isfinite(row.regularization_loss) || !std::isfinite(row.total)) {
        fail(ErrorCode::Numerical, describe(row, p.sample->name));
      }
      tape.backward(total);
      diff::adam_step(result.params, lr);
      result.log.push_back(row);
      if (log) log(row);
    }
    if (checkpoint && (epoch % config.checkpoint_every == 0 || epoch == config.epochs)) {
      checkpoint(epoch, result.params);
    }
  }
  return result;
}

}  // namespace bg::train
