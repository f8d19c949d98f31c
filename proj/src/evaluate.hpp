// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "diff.hpp"
#include "model.hpp"
#include "synthetic.hpp"

namespace bg::evaluate {

struct PairReport {
  std::string name;
  double error = 0.0;         // mean geodesic error / sqrt(area of B)
  double bijectivity = 0.0;   // percent of seeds with a mutual match
  int mutual = 0;
  int seeds = 0;
};

struct EvalReport {
  double mean_error = 0.0;
  double bijectivity_rate = 0.0;
  std::vector<PairReport> pairs;
};

/// Scores one plan: every A seed goes to its row argmax, the error is the
/// geodesic on B between that seed and the ground-truth image of the A seed.
PairReport score_plan(const Matrix& log_plan, const ShapeContext& a, const ShapeContext& b,
                      std::span<const int> correspondence);

PairReport evaluate_pair(const MatchingModel& model, diff::ParameterStore& params,
                         const synthetic::ShapePairSample& sample);

EvalReport evaluate(const TrainConfig& config, diff::ParameterStore& params,
                    std::span<const synthetic::ShapePairSample> pairs);

/// One tab-separated line per pair (name error bijectivity mutual seeds)
/// after a header, then "mean_error\t<e>\tbijectivity_rate\t<br>".
void write_report(const EvalReport& report, std::ostream& out);

}  // namespace bg::evaluate
