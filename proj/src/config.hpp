// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "descriptor.hpp"
#include "got.hpp"
#include "hiergraph.hpp"
#include "losses.hpp"

namespace bg {

/// Every tunable of the pipeline. Serialized as flat "key = value" text; see
/// TrainConfig::keys() for the full list.
struct TrainConfig {
  int seeds = 200;
  double d_cut = 7;
  hiergraph::CutMetric cut_metric = hiergraph::CutMetric::Hops;
  double local_radius = 0.1;
  double shape_radius = 0.35;
  int feature_dim = 64;
  std::array<int, 3> tag_widths{32, 64, 64};
  double sigma = 8.0;
  int frequencies = 9;  // m
  double temperature = 0.1;
  int sinkhorn_iters = 100;
  int n_got = 1;
  int n_gfp = 2;
  double margin = 0.2;
  double soft_radius = 0.15;  // r_d
  double lr_initial = 1e-3;
  double lr_final = 1e-4;
  int lr_switch_epoch = 30;  // last epoch at lr_initial
  int epochs = 60;
  std::uint64_t rng_seed = 42;
  int loss_switch_epoch = 30;  // last epoch of the early weights
  losses::LossWeights early_weights{1.0, 0.0, 1.0};
  losses::LossWeights late_weights{0.1, 1.0, 1.0};
  int negative_min_hops = 0;  // 0 selects 2 * d_cut
  int negative_max_hops = 0;  // 0 selects 4 * d_cut
  bool augment_rotation = true;
  int checkpoint_every = 10;
  got::MatchMode match_mode = got::MatchMode::Mutual;
  int fps_start = 0;

  void validate() const;

  double learning_rate(int epoch) const;
  losses::LossSchedule loss_schedule() const;
  std::pair<int, int> negative_ring() const;
  descriptor::DescriptorConfig descriptor_config() const;
  got::GotConfig got_config() const;

  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static TrainConfig load(const std::filesystem::path& path);

  /// Sets one field from its text form.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();
};

}  // namespace bg
