// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end over the C interface.
//
//   bendgraph gen   --out DIR [--count N --bend-min A --bend-max B ...]
//   bendgraph train --config FILE --data DIR --out DIR
//   bendgraph match --source A.off --target B.off --checkpoint CKPT --out FILE
//   bendgraph eval  --data DIR --checkpoint CKPT [--config FILE]
#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "bendgraph/bendgraph.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitMissingInput = 2;

int report(bg_status status, const char* context) {
  std::fprintf(stderr, "bendgraph %s: %s: %s\n", context, bg_status_name(status), bg_last_error());
  return status == BG_ERR_NOT_FOUND ? kExitMissingInput : kExitFailure;
}

// Config from an optional file plus repeated key=value overrides.
bg_status load_config(const std::string& path, const std::vector<std::string>& overrides,
                      bg_config** out) {
  bg_status st = path.empty() ? bg_config_create(out) : bg_config_load(path.c_str(), out);
  if (st != BG_OK) return st;
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "bendgraph: override '%s' is not key=value\n", kv.c_str());
      bg_config_destroy(*out);
      *out = nullptr;
      return BG_ERR_INVALID_ARGUMENT;
    }
    st = bg_config_set(*out, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != BG_OK) {
      bg_config_destroy(*out);
      *out = nullptr;
      return st;
    }
  }
  return BG_OK;
}

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bendgraph: learned coarse correspondences between deformable meshes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bg_version()));

  std::string config_path;
  std::vector<std::string> overrides;

  bg_dataset_options gen_opts;
  bg_dataset_options_default(&gen_opts);
  std::string gen_out, gen_base = "cylinder", gen_prefix = "pair";
  auto* gen = app.add_subcommand("gen", "write a synthetic dataset of deformed pairs");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--base", gen_base, "cylinder, sphere or bar")->capture_default_str();
  gen->add_option("--resolution", gen_opts.resolution, "samples around the axis")->capture_default_str();
  gen->add_option("--count", gen_opts.count, "number of pairs")->capture_default_str();
  gen->add_option("--bend-min", gen_opts.bend_min, "smallest bend angle (radians)")->capture_default_str();
  gen->add_option("--bend-max", gen_opts.bend_max, "largest bend angle (radians)")->capture_default_str();
  gen->add_option("--twist-max", gen_opts.twist_max, "largest |twist| per unit height")->capture_default_str();
  gen->add_option("--bump-max", gen_opts.bump_max, "largest bump amplitude")->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "random seed")->capture_default_str();
  gen->add_option("--prefix", gen_prefix, "pair name prefix")->capture_default_str();

  std::string train_data, train_out;
  auto* train = app.add_subcommand("train", "train on a dataset directory");
  train->add_option("--config", config_path, "config file (key = value)");
  train->add_option("--set", overrides, "override a config key, key=value");
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--out", train_out, "output directory")->required();

  std::string source_path, target_path, checkpoint, match_out;
  bool dump_graphs = false;
  auto* match = app.add_subcommand("match", "match two meshes with a trained checkpoint");
  match->add_option("--config", config_path, "config file used for training");
  match->add_option("--set", overrides, "override a config key, key=value");
  match->add_option("--source", source_path, "source mesh (.off or .ply)")->required();
  match->add_option("--target", target_path, "target mesh (.off or .ply)")->required();
  match->add_option("--checkpoint", checkpoint, "parameter checkpoint")->required();
  match->add_option("--out", match_out, "match file to write")->required();
  match->add_flag("--dump-graphs", dump_graphs,
                  "also write <out>_source.graph and <out>_target.graph");

  std::string eval_data;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset directory");
  eval->add_option("--config", config_path, "config file used for training");
  eval->add_option("--set", overrides, "override a config key, key=value");
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--checkpoint", checkpoint, "parameter checkpoint")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    gen_opts.base = gen_base.c_str();
    gen_opts.prefix = gen_prefix.c_str();
    const bg_status st = bg_generate_dataset(&gen_opts, gen_out.c_str());
    if (st != BG_OK) return report(st, "gen");
    std::printf("wrote %d pairs to %s\n", gen_opts.count, gen_out.c_str());
    return 0;
  }

  bg_config* config = nullptr;
  bg_status st = load_config(config_path, overrides, &config);
  if (st != BG_OK) return report(st, "config");

  int code = 0;
  if (train->parsed()) {
    st = bg_train(config, train_data.c_str(), train_out.c_str(), print_line, nullptr);
    if (st != BG_OK) code = report(st, "train");
  } else {
    bg_model* model = nullptr;
    st = bg_model_load(config, checkpoint.c_str(), &model);
    if (st != BG_OK) {
      code = report(st, "checkpoint");
    } else if (match->parsed()) {
      bg_mesh* a = nullptr;
      bg_mesh* b = nullptr;
      bg_match_set* matches = nullptr;
      if ((st = bg_mesh_load(source_path.c_str(), &a)) != BG_OK) {
        code = report(st, "source mesh");
      } else if ((st = bg_mesh_load(target_path.c_str(), &b)) != BG_OK) {
        code = report(st, "target mesh");
      } else if ((st = bg_match(model, a, b, dump_graphs ? match_out.c_str() : nullptr, &matches)) !=
                 BG_OK) {
        code = report(st, "match");
      } else if ((st = bg_match_set_write(matches, match_out.c_str())) != BG_OK) {
        code = report(st, "match output");
      } else {
        std::printf("%zu matches of %d seeds written to %s\n", bg_match_set_size(matches),
                    bg_match_set_seed_count(matches), match_out.c_str());
      }
      bg_match_set_destroy(matches);
      bg_mesh_destroy(b);
      bg_mesh_destroy(a);
    } else if (eval->parsed()) {
      bg_eval_report* rep = nullptr;
      if ((st = bg_evaluate(model, eval_data.c_str(), &rep)) != BG_OK) {
        code = report(st, "eval");
      } else {
        std::fputs(bg_eval_report_text(rep), stdout);
      }
      bg_eval_report_destroy(rep);
    }
    bg_model_destroy(model);
  }
  bg_config_destroy(config);
  return code;
}
