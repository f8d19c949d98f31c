// SPDX-License-Identifier: Apache-2.0
#include "bendgraph/bendgraph.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "evaluate.hpp"
#include "formats.hpp"
#include "model.hpp"
#include "synthetic.hpp"
#include "train.hpp"

struct bg_config {
  bg::TrainConfig value;
};

struct bg_mesh {
  bg::mesh::TriangleMesh value;
};

struct bg_model {
  bg::TrainConfig config;
  bg::diff::ParameterStore params;
};

struct bg_match_set {
  bg::got::MatchSet value;
};

struct bg_eval_report {
  bg::evaluate::EvalReport value;
  std::string text;
};

namespace {

thread_local std::string g_last_error;

bg_status set_error(bg_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

bg_status to_status(bg::ErrorCode code) {
  switch (code) {
    case bg::ErrorCode::InvalidArgument: return BG_ERR_INVALID_ARGUMENT;
    case bg::ErrorCode::Parse: return BG_ERR_PARSE;
    case bg::ErrorCode::Io: return BG_ERR_IO;
    case bg::ErrorCode::NotFound: return BG_ERR_NOT_FOUND;
    case bg::ErrorCode::DegenerateGeometry: return BG_ERR_DEGENERATE_GEOMETRY;
    case bg::ErrorCode::ShapeMismatch: return BG_ERR_SHAPE_MISMATCH;
    case bg::ErrorCode::Numerical: return BG_ERR_NUMERICAL;
  }
  return BG_ERR_INTERNAL;
}

template <typename F>
bg_status guarded(F&& body) {
  try {
    body();
    return BG_OK;
  } catch (const bg::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(BG_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(BG_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return set_error(BG_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) bg::fail(bg::ErrorCode::InvalidArgument, what);
}

std::string checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "checkpoint_e%04d.bgck", epoch);
  return buf;
}

}  // namespace

extern "C" {

const char* bg_version(void) { return "0.1.0"; }

const char* bg_last_error(void) { return g_last_error.c_str(); }

const char* bg_status_name(bg_status status) {
  switch (status) {
    case BG_OK: return "ok";
    case BG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BG_ERR_PARSE: return "parse error";
    case BG_ERR_IO: return "i/o error";
    case BG_ERR_NOT_FOUND: return "not found";
    case BG_ERR_DEGENERATE_GEOMETRY: return "degenerate geometry";
    case BG_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case BG_ERR_NUMERICAL: return "numerical error";
    case BG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

bg_status bg_config_create(bg_config** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    *out = new bg_config{};
  });
}

bg_status bg_config_load(const char* path, bg_config** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must not be NULL");
    *out = new bg_config{bg::TrainConfig::load(path)};
  });
}

bg_status bg_config_save(const bg_config* config, const char* path) {
  return guarded([&] {
    require(config != nullptr && path != nullptr, "config and path must not be NULL");
    config->value.save(path);
  });
}

bg_status bg_config_set(bg_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config != nullptr && key != nullptr && value != nullptr,
            "config, key and value must not be NULL");
    bg::TrainConfig next = config->value;
    next.set(key, value);
    next.validate();
    config->value = next;
  });
}

bg_status bg_config_get(const bg_config* config, const char* key, char* buffer,
                        size_t buffer_size, size_t* needed) {
  return guarded([&] {
    require(config != nullptr && key != nullptr, "config and key must not be NULL");
    const std::string text = config->value.get(key);
    if (needed) *needed = text.size() + 1;
    if (buffer != nullptr && buffer_size > text.size()) {
      std::memcpy(buffer, text.c_str(), text.size() + 1);
    } else if (buffer != nullptr) {
      bg::fail(bg::ErrorCode::InvalidArgument, "buffer too small for value of '" + std::string(key) + "'");
    }
  });
}

size_t bg_config_key_count(void) { return bg::TrainConfig::keys().size(); }

const char* bg_config_key(size_t index) {
  const auto& keys = bg::TrainConfig::keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

void bg_config_destroy(bg_config* config) { delete config; }

bg_status bg_mesh_load(const char* path, bg_mesh** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must not be NULL");
    if (!std::filesystem::exists(path)) {
      bg::fail(bg::ErrorCode::NotFound, std::string("mesh file not found: ") + path);
    }
    *out = new bg_mesh{bg::mesh::load_mesh_file(path)};
  });
}

bg_status bg_mesh_from_arrays(const double* xyz, size_t vertex_count, const int32_t* faces,
                              size_t face_count, bg_mesh** out) {
  return guarded([&] {
    require(out != nullptr && (xyz != nullptr || vertex_count == 0) &&
                (faces != nullptr || face_count == 0),
            "arrays and out must not be NULL");
    auto mesh = std::make_unique<bg_mesh>();
    for (size_t v = 0; v < vertex_count; ++v) {
      mesh->value.vertices.emplace_back(xyz[3 * v], xyz[3 * v + 1], xyz[3 * v + 2]);
    }
    for (size_t f = 0; f < face_count; ++f) {
      bg::mesh::Face face{faces[3 * f], faces[3 * f + 1], faces[3 * f + 2]};
      for (int idx : face) {
        require(idx >= 0 && static_cast<size_t>(idx) < vertex_count, "face index out of range");
      }
      mesh->value.faces.push_back(face);
    }
    *out = mesh.release();
  });
}

size_t bg_mesh_vertex_count(const bg_mesh* mesh) { return mesh ? mesh->value.vertices.size() : 0; }

size_t bg_mesh_face_count(const bg_mesh* mesh) { return mesh ? mesh->value.faces.size() : 0; }

void bg_mesh_destroy(bg_mesh* mesh) { delete mesh; }

bg_status bg_model_create(const bg_config* config, uint64_t seed, bg_model** out) {
  return guarded([&] {
    require(config != nullptr && out != nullptr, "config and out must not be NULL");
    const bg::MatchingModel model(config->value);
    *out = new bg_model{config->value, model.create_parameters(seed)};
  });
}

bg_status bg_model_load(const bg_config* config, const char* checkpoint_path, bg_model** out) {
  return guarded([&] {
    require(config != nullptr && checkpoint_path != nullptr && out != nullptr,
            "config, checkpoint_path and out must not be NULL");
    if (!std::filesystem::exists(checkpoint_path)) {
      bg::fail(bg::ErrorCode::NotFound, std::string("checkpoint not found: ") + checkpoint_path);
    }
    const bg::MatchingModel model(config->value);
    auto params = model.create_parameters(0);
    params.load_file(checkpoint_path);
    *out = new bg_model{config->value, std::move(params)};
  });
}

bg_status bg_model_save(const bg_model* model, const char* checkpoint_path) {
  return guarded([&] {
    require(model != nullptr && checkpoint_path != nullptr, "model and path must not be NULL");
    model->params.save_file(checkpoint_path);
  });
}

bg_status bg_model_checksum(const bg_model* model, uint64_t* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "model and out must not be NULL");
    *out = model->params.checksum();
  });
}

void bg_model_destroy(bg_model* model) { delete model; }

bg_status bg_match(bg_model* model, const bg_mesh* source, const bg_mesh* target,
                   const char* dump_prefix, bg_match_set** out) {
  return guarded([&] {
    require(model != nullptr && source != nullptr && target != nullptr && out != nullptr,
            "model, meshes and out must not be NULL");
    const bg::MatchingModel net(model->config);
    const auto a = bg::prepare_shape(bg::mesh::normalize_to_unit_ball(source->value), model->config);
    const auto b = bg::prepare_shape(bg::mesh::normalize_to_unit_ball(target->value), model->config);
    if (dump_prefix != nullptr) {
      bg::formats::save_shape_graph(a.shape_graph, std::string(dump_prefix) + "_source.graph");
      bg::formats::save_shape_graph(b.shape_graph, std::string(dump_prefix) + "_target.graph");
    }
    auto result = net.match(model->params, a, b);
    *out = new bg_match_set{std::move(result.matches)};
  });
}

size_t bg_match_set_size(const bg_match_set* matches) {
  return matches ? matches->value.pairs.size() : 0;
}

int bg_match_set_seed_count(const bg_match_set* matches) { return matches ? matches->value.n : 0; }

bg_status bg_match_set_get(const bg_match_set* matches, size_t index, int* source, int* target,
                           double* confidence, int* mutual) {
  return guarded([&] {
    require(matches != nullptr, "matches must not be NULL");
    require(index < matches->value.pairs.size(), "match index out of range");
    const auto& m = matches->value.pairs[index];
    if (source) *source = m.source;
    if (target) *target = m.target;
    if (confidence) *confidence = m.confidence;
    if (mutual) *mutual = m.mutual ? 1 : 0;
  });
}

bg_status bg_match_set_write(const bg_match_set* matches, const char* path) {
  return guarded([&] {
    require(matches != nullptr && path != nullptr, "matches and path must not be NULL");
    bg::formats::save_match_set(matches->value, path);
  });
}

void bg_match_set_destroy(bg_match_set* matches) { delete matches; }

void bg_dataset_options_default(bg_dataset_options* options) {
  if (options == nullptr) return;
  const bg::synthetic::DatasetSpec spec;
  options->base = "cylinder";
  options->resolution = spec.resolution;
  options->count = spec.count;
  options->bend_min = spec.bend_min;
  options->bend_max = spec.bend_max;
  options->twist_max = spec.twist_max;
  options->bump_max = spec.bump_max;
  options->seed = spec.seed;
  options->prefix = "pair";
}

bg_status bg_generate_dataset(const bg_dataset_options* options, const char* directory) {
  return guarded([&] {
    require(options != nullptr && directory != nullptr, "options and directory must not be NULL");
    bg::synthetic::DatasetSpec spec;
    spec.base = bg::synthetic::base_shape_from_string(options->base ? options->base : "cylinder");
    spec.resolution = options->resolution;
    spec.count = options->count;
    spec.bend_min = options->bend_min;
    spec.bend_max = options->bend_max;
    spec.twist_max = options->twist_max;
    spec.bump_max = options->bump_max;
    spec.seed = options->seed;
    spec.prefix = options->prefix ? options->prefix : "pair";
    const auto samples = bg::synthetic::generate_dataset(spec);
    bg::formats::save_dataset(samples, directory);
  });
}

bg_status bg_train(const bg_config* config, const char* dataset_directory,
                   const char* output_directory, bg_log_callback log_line, void* user) {
  return guarded([&] {
    require(config != nullptr && dataset_directory != nullptr && output_directory != nullptr,
            "config and directories must not be NULL");
    const auto dataset = bg::formats::load_dataset(dataset_directory);
    const std::filesystem::path out_dir(output_directory);
    std::filesystem::create_directories(out_dir);
    config->value.save(out_dir / "config.txt");

    std::ofstream log(out_dir / "train_log.tsv", std::ios::binary);
    if (!log) bg::fail(bg::ErrorCode::Io, "cannot write " + (out_dir / "train_log.tsv").string());
    auto emit = [&](const std::string& line) {
      log << line << '\n';
      log.flush();
      if (log_line) log_line(line.c_str(), user);
    };
    emit(bg::train::log_header());
    const int last = config->value.epochs;
    const auto result = bg::train::train(
        config->value, dataset,
        [&](int epoch, const bg::diff::ParameterStore& params) {
          if (epoch % config->value.checkpoint_every == 0) {
            params.save_file(out_dir / checkpoint_name(epoch));
          }
          if (epoch == last) params.save_file(out_dir / "final.bgck");
        },
        [&](const bg::train::LogRow& row) { emit(bg::train::format_log_row(row)); });
    (void)result;
  });
}

bg_status bg_evaluate(bg_model* model, const char* dataset_directory, bg_eval_report** out) {
  return guarded([&] {
    require(model != nullptr && dataset_directory != nullptr && out != nullptr,
            "model, dataset_directory and out must not be NULL");
    const auto dataset = bg::formats::load_dataset(dataset_directory);
    auto report = std::make_unique<bg_eval_report>();
    report->value = bg::evaluate::evaluate(model->config, model->params, dataset);
    std::ostringstream text;
    bg::evaluate::write_report(report->value, text);
    report->text = text.str();
    *out = report.release();
  });
}

double bg_eval_report_mean_error(const bg_eval_report* report) {
  return report ? report->value.mean_error : 0.0;
}

double bg_eval_report_bijectivity_rate(const bg_eval_report* report) {
  return report ? report->value.bijectivity_rate : 0.0;
}

const char* bg_eval_report_text(const bg_eval_report* report) {
  return report ? report->text.c_str() : "";
}

void bg_eval_report_destroy(bg_eval_report* report) { delete report; }

}  // extern "C"
