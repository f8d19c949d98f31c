// SPDX-License-Identifier: Apache-2.0
#include "evaluate.hpp"

#include <cmath>
#include <ostream>

#include "error.hpp"
#include "formats.hpp"

namespace bg::evaluate {

PairReport score_plan(const Matrix& log_plan, const ShapeContext& a, const ShapeContext& b,
                      std::span<const int> correspondence) {
  const auto n = static_cast<Eigen::Index>(a.seeds.size());
  if (log_plan.rows() != n || log_plan.cols() != static_cast<Eigen::Index>(b.seeds.size())) {
    fail(ErrorCode::ShapeMismatch, "plan size differs from the seed counts");
  }
  const auto matches = got::extract_matches(log_plan, got::MatchMode::RowArgmax);
  const double scale = std::sqrt(mesh::surface_area(b.mesh));
  if (!(scale > 0.0)) fail(ErrorCode::DegenerateGeometry, "target mesh has zero area");

  PairReport report;
  report.seeds = static_cast<int>(n);
  double total = 0.0;
  for (const auto& m : matches.pairs) {
    const int seed = a.seeds[m.source];
    if (seed >= static_cast<int>(correspondence.size()) || correspondence[seed] < 0) {
      fail(ErrorCode::InvalidArgument, "no ground-truth image for seed vertex " + std::to_string(seed));
    }
    const auto dist = mesh::dijkstra_geodesics(b.graph, correspondence[seed]);
    const auto it = dist.find(b.seeds[m.target]);
    if (it == dist.end()) {
      fail(ErrorCode::DegenerateGeometry, "predicted seed is unreachable from the ground truth");
    }
    total += it->second;
    report.mutual += m.mutual ? 1 : 0;
  }
  report.error = n > 0 ? total / static_cast<double>(n) / scale : 0.0;
  report.bijectivity = n > 0 ? 100.0 * report.mutual / static_cast<double>(n) : 0.0;
  return report;
}

PairReport evaluate_pair(const MatchingModel& model, diff::ParameterStore& params,
                         const synthetic::ShapePairSample& sample) {
  // Positional encodings see absolute coordinates, so both shapes are put
  // in the unit-ball frame first. Generated pairs are already normalized.
  const ShapeContext a = prepare_shape(mesh::normalize_to_unit_ball(sample.mesh_a), model.config());
  const ShapeContext b = prepare_shape(mesh::normalize_to_unit_ball(sample.mesh_b), model.config());
  const auto out = model.match(params, a, b);
  PairReport report = score_plan(out.plan.log_plan, a, b, sample.correspondence);
  report.name = sample.name;
  return report;
}

EvalReport evaluate(const TrainConfig& config, diff::ParameterStore& params,
                    std::span<const synthetic::ShapePairSample> pairs) {
  const MatchingModel model(config);
  EvalReport report;
  for (const auto& sample : pairs) report.pairs.push_back(evaluate_pair(model, params, sample));
  if (!report.pairs.empty()) {
    for (const auto& p : report.pairs) {
      report.mean_error += p.error;
      report.bijectivity_rate += p.bijectivity;
    }
    report.mean_error /= static_cast<double>(report.pairs.size());
    report.bijectivity_rate /= static_cast<double>(report.pairs.size());
  }
  return report;
}

void write_report(const EvalReport& report, std::ostream& out) {
  using formats::format_double;
  out << "name\terror\tbijectivity\tmutual\tseeds\n";
  for (const auto& p : report.pairs) {
    out << p.name << '\t' << format_double(p.error) << '\t' << format_double(p.bijectivity) << '\t'
        << p.mutual << '\t' << p.seeds << '\n';
  }
  out << "mean_error\t" << format_double(report.mean_error) << "\tbijectivity_rate\t"
      << format_double(report.bijectivity_rate) << '\n';
}

}  // namespace bg::evaluate
