// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "error.hpp"

namespace bg {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    fail(ErrorCode::Parse, "config key '" + key + "': invalid number '" + text + "'");
  }
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
  Int v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    fail(ErrorCode::Parse, "config key '" + key + "': invalid integer '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  fail(ErrorCode::Parse, "config key '" + key + "': expected true/false, got '" + text + "'");
}

struct Field {
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

#define BG_DOUBLE(name, member)                                                      \
  {                                                                                  \
    name, {                                                                          \
      [](const TrainConfig& c) { return fmt_double(c.member); },                     \
          [](TrainConfig& c, const std::string& v) { c.member = to_double(name, v); } \
    }                                                                                \
  }
#define BG_INT(name, member)                                                               \
  {                                                                                        \
    name, {                                                                                \
      [](const TrainConfig& c) { return std::to_string(c.member); },                       \
          [](TrainConfig& c, const std::string& v) {                                       \
            c.member = to_int<decltype(c.member)>(name, v);                                \
          }                                                                                \
    }                                                                                      \
  }

const std::vector<std::pair<std::string, Field>>& field_table() {
  static const std::vector<std::pair<std::string, Field>> table = {
      BG_INT("seeds", seeds),
      BG_DOUBLE("d_cut", d_cut),
      {"cut_metric",
       {[](const TrainConfig& c) {
          return std::string(c.cut_metric == hiergraph::CutMetric::Hops ? "hops" : "geodesic");
        },
        [](TrainConfig& c, const std::string& v) {
          if (v == "hops") {
            c.cut_metric = hiergraph::CutMetric::Hops;
          } else if (v == "geodesic") {
            c.cut_metric = hiergraph::CutMetric::Geodesic;
          } else {
            fail(ErrorCode::Parse, "config key 'cut_metric': expected hops or geodesic");
          }
        }}},
      BG_DOUBLE("local_radius", local_radius),
      BG_DOUBLE("shape_radius", shape_radius),
      BG_INT("feature_dim", feature_dim),
      {"tag_widths",
       {[](const TrainConfig& c) {
          return std::to_string(c.tag_widths[0]) + "," + std::to_string(c.tag_widths[1]) + "," +
                 std::to_string(c.tag_widths[2]);
        },
        [](TrainConfig& c, const std::string& v) {
          std::stringstream in(v);
          std::string part;
          for (int k = 0; k < 3; ++k) {
            if (!std::getline(in, part, ',')) {
              fail(ErrorCode::Parse, "config key 'tag_widths': expected three comma-separated widths");
            }
            c.tag_widths[k] = to_int<int>("tag_widths", trim(part));
          }
          if (std::getline(in, part, ',')) {
            fail(ErrorCode::Parse, "config key 'tag_widths': expected three widths");
          }
        }}},
      BG_DOUBLE("sigma", sigma),
      BG_INT("frequencies", frequencies),
      BG_DOUBLE("temperature", temperature),
      BG_INT("sinkhorn_iters", sinkhorn_iters),
      BG_INT("n_got", n_got),
      BG_INT("n_gfp", n_gfp),
      BG_DOUBLE("margin", margin),
      BG_DOUBLE("soft_radius", soft_radius),
      BG_DOUBLE("lr_initial", lr_initial),
      BG_DOUBLE("lr_final", lr_final),
      BG_INT("lr_switch_epoch", lr_switch_epoch),
      BG_INT("epochs", epochs),
      BG_INT("rng_seed", rng_seed),
      BG_INT("loss_switch_epoch", loss_switch_epoch),
      BG_DOUBLE("gamma_d_early", early_weights.descriptor),
      BG_DOUBLE("gamma_m_early", early_weights.matching),
      BG_DOUBLE("gamma_r_early", early_weights.regularization),
      BG_DOUBLE("gamma_d_late", late_weights.descriptor),
      BG_DOUBLE("gamma_m_late", late_weights.matching),
      BG_DOUBLE("gamma_r_late", late_weights.regularization),
      BG_INT("negative_min_hops", negative_min_hops),
      BG_INT("negative_max_hops", negative_max_hops),
      {"augment_rotation",
       {[](const TrainConfig& c) { return std::string(c.augment_rotation ? "true" : "false"); },
        [](TrainConfig& c, const std::string& v) {
          c.augment_rotation = to_bool("augment_rotation", v);
        }}},
      BG_INT("checkpoint_every", checkpoint_every),
      {"match_mode",
       {[](const TrainConfig& c) { return got::to_string(c.match_mode); },
        [](TrainConfig& c, const std::string& v) { c.match_mode = got::match_mode_from_string(v); }}},
      BG_INT("fps_start", fps_start),
  };
  return table;
}

#undef BG_DOUBLE
#undef BG_INT

const Field& field(const std::string& key) {
  for (const auto& [name, f] : field_table()) {
    if (name == key) return f;
  }
  fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::InvalidArgument, std::string("invalid config: ") + what);
  };
  require(seeds >= 1, "seeds must be >= 1");
  require(d_cut >= 0, "d_cut must be >= 0");
  require(local_radius > 0, "local_radius must be > 0");
  require(shape_radius > 0, "shape_radius must be > 0");
  require(feature_dim >= 1, "feature_dim must be >= 1");
  require(tag_widths[0] > 0 && tag_widths[1] > 0 && tag_widths[2] > 0, "tag widths must be > 0");
  require(sigma > 1, "sigma must be > 1");
  require(frequencies >= 2, "frequencies must be >= 2");
  require(temperature > 0, "temperature must be > 0");
  require(sinkhorn_iters >= 1, "sinkhorn_iters must be >= 1");
  require(n_got >= 0 && n_gfp >= 0, "n_got and n_gfp must be >= 0");
  require(margin >= 0, "margin must be >= 0");
  require(soft_radius > 0, "soft_radius must be > 0");
  require(lr_initial > 0 && lr_final > 0, "learning rates must be > 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(checkpoint_every >= 1, "checkpoint_every must be >= 1");
  require(negative_min_hops >= 0 && negative_max_hops >= 0, "negative ring must be >= 0");
  const auto [lo, hi] = negative_ring();
  require(lo >= 1 && hi >= lo, "negative ring must satisfy 1 <= min <= max");
  require(fps_start >= 0, "fps_start must be >= 0");
}

double TrainConfig::learning_rate(int epoch) const {
  return epoch <= lr_switch_epoch ? lr_initial : lr_final;
}

losses::LossSchedule TrainConfig::loss_schedule() const {
  return losses::LossSchedule({{loss_switch_epoch, early_weights},
                               {loss_switch_epoch + 1, late_weights}});
}

std::pair<int, int> TrainConfig::negative_ring() const {
  const int hops = static_cast<int>(std::floor(d_cut));
  const int lo = negative_min_hops > 0 ? negative_min_hops : std::max(1, 2 * hops);
  const int hi = negative_max_hops > 0 ? negative_max_hops : std::max(lo, 4 * hops);
  return {lo, hi};
}

descriptor::DescriptorConfig TrainConfig::descriptor_config() const {
  descriptor::DescriptorConfig cfg;
  cfg.feature_dim = feature_dim;
  cfg.tag_widths = tag_widths;
  cfg.encoding = {sigma, frequencies};
  return cfg;
}

got::GotConfig TrainConfig::got_config() const {
  return {n_got, n_gfp, sinkhorn_iters, temperature, match_mode};
}

std::string TrainConfig::to_text() const {
  std::string out = "# bendgraph configuration\n";
  for (const auto& [name, f] : field_table()) out += name + " = " + f.get(*this) + "\n";
  return out;
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig cfg;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::Parse, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void TrainConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write config " + path.string());
  out << to_text();
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::NotFound, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, value);
}

std::string TrainConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : field_table()) out.push_back(name);
    return out;
  }();
  return names;
}

}  // namespace bg
