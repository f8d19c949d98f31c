// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "diff.hpp"
#include "synthetic.hpp"

namespace bg::train {

struct LogRow {
  int epoch = 0;  // 1-based
  int step = 0;   // 1-based, global
  double descriptor_loss = 0;
  double matching_loss = 0;
  double regularization_loss = 0;
  double total = 0;
  losses::LossWeights weights;
  double learning_rate = 0;
};

/// Tab-separated: epoch step L_D L_M L_R total gamma_D gamma_M gamma_R lr.
std::string log_header();
std::string format_log_row(const LogRow& row);

/// Called after epochs that are a multiple of checkpoint_every, and after
/// the last epoch.
using CheckpointSink = std::function<void(int epoch, const diff::ParameterStore& params)>;
using LogSink = std::function<void(const LogRow& row)>;

struct TrainResult {
  diff::ParameterStore params;
  std::vector<LogRow> log;

  /// Mean total loss over the steps of `epoch`.
  double epoch_mean_total(int epoch) const;
};

/// Deterministic in config.rng_seed. Throws Error(Numerical) naming the
/// sample and loss components when a loss turns non-finite.
TrainResult train(const TrainConfig& config,
                  std::span<const synthetic::ShapePairSample> dataset,
                  const CheckpointSink& checkpoint = {}, const LogSink& log = {});

/// Uniformly distributed rotation.
Eigen::Matrix3d random_rotation(diff::Rng& rng);

}  // namespace bg::train
