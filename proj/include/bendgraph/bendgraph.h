/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the bendgraph shape-correspondence library.
 *
 * Every function that can fail returns a bg_status. On failure the message
 * for the calling thread is available from bg_last_error() until the next
 * failing call on that thread. Handles are opaque and owned by the caller;
 * release them with the matching *_destroy function (NULL is accepted).
 */
#ifndef BENDGRAPH_BENDGRAPH_H
#define BENDGRAPH_BENDGRAPH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(BENDGRAPH_BUILDING_LIBRARY)
#define BG_API __declspec(dllexport)
#else
#define BG_API __declspec(dllimport)
#endif
#else
#define BG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bg_status {
  BG_OK = 0,
  BG_ERR_INVALID_ARGUMENT = 1,
  BG_ERR_PARSE = 2,
  BG_ERR_IO = 3,
  BG_ERR_NOT_FOUND = 4,
  BG_ERR_DEGENERATE_GEOMETRY = 5,
  BG_ERR_SHAPE_MISMATCH = 6,
  BG_ERR_NUMERICAL = 7,
  BG_ERR_INTERNAL = 100
} bg_status;

typedef struct bg_config bg_config;
typedef struct bg_mesh bg_mesh;
typedef struct bg_model bg_model;
typedef struct bg_match_set bg_match_set;
typedef struct bg_eval_report bg_eval_report;

BG_API const char* bg_version(void);
BG_API const char* bg_last_error(void);
BG_API const char* bg_status_name(bg_status status);

/* Configuration: every field has a text key; see bg_config_key(). */
BG_API bg_status bg_config_create(bg_config** out);
BG_API bg_status bg_config_load(const char* path, bg_config** out);
BG_API bg_status bg_config_save(const bg_config* config, const char* path);
BG_API bg_status bg_config_set(bg_config* config, const char* key, const char* value);
/* Copies the value and its terminator into buffer when it fits. *needed
 * receives the required size including the terminator. */
BG_API bg_status bg_config_get(const bg_config* config, const char* key, char* buffer,
                               size_t buffer_size, size_t* needed);
BG_API size_t bg_config_key_count(void);
BG_API const char* bg_config_key(size_t index);
BG_API void bg_config_destroy(bg_config* config);

/* Meshes: OFF or ASCII PLY, chosen by file extension. */
BG_API bg_status bg_mesh_load(const char* path, bg_mesh** out);
BG_API bg_status bg_mesh_from_arrays(const double* xyz, size_t vertex_count, const int32_t* faces,
                                     size_t face_count, bg_mesh** out);
BG_API size_t bg_mesh_vertex_count(const bg_mesh* mesh);
BG_API size_t bg_mesh_face_count(const bg_mesh* mesh);
BG_API void bg_mesh_destroy(bg_mesh* mesh);

/* Models hold a copy of the configuration plus the parameters. */
BG_API bg_status bg_model_create(const bg_config* config, uint64_t seed, bg_model** out);
/* BG_ERR_NOT_FOUND when the checkpoint file does not exist. */
BG_API bg_status bg_model_load(const bg_config* config, const char* checkpoint_path,
                               bg_model** out);
BG_API bg_status bg_model_save(const bg_model* model, const char* checkpoint_path);
BG_API bg_status bg_model_checksum(const bg_model* model, uint64_t* out);
BG_API void bg_model_destroy(bg_model* model);

/* Matches two meshes. Both are normalized to the unit ball first. When
 * dump_prefix is not NULL the two shape graphs are written to
 * <dump_prefix>_source.graph and <dump_prefix>_target.graph. */
BG_API bg_status bg_match(bg_model* model, const bg_mesh* source, const bg_mesh* target,
                          const char* dump_prefix, bg_match_set** out);
BG_API size_t bg_match_set_size(const bg_match_set* matches);
BG_API int bg_match_set_seed_count(const bg_match_set* matches);
BG_API bg_status bg_match_set_get(const bg_match_set* matches, size_t index, int* source,
                                  int* target, double* confidence, int* mutual);
BG_API bg_status bg_match_set_write(const bg_match_set* matches, const char* path);
BG_API void bg_match_set_destroy(bg_match_set* matches);

/* Synthetic datasets. base is "cylinder", "sphere" or "bar"; parameters are
 * drawn uniformly: bend in [bend_min, bend_max], twist in
 * [-twist_max, twist_max], bump amplitude in [0, bump_max]. */
typedef struct bg_dataset_options {
  const char* base;
  int resolution;
  int count;
  double bend_min;
  double bend_max;
  double twist_max;
  double bump_max;
  uint64_t seed;
  const char* prefix;
} bg_dataset_options;

BG_API void bg_dataset_options_default(bg_dataset_options* options);
BG_API bg_status bg_generate_dataset(const bg_dataset_options* options, const char* directory);

/* Trains on a dataset directory. The output directory receives config.txt,
 * train_log.tsv, checkpoint_eNNNN.bgck every checkpoint_every epochs and
 * final.bgck. log_line, when not NULL, sees every log line as written. */
typedef void (*bg_log_callback)(const char* line, void* user);
BG_API bg_status bg_train(const bg_config* config, const char* dataset_directory,
                          const char* output_directory, bg_log_callback log_line, void* user);

BG_API bg_status bg_evaluate(bg_model* model, const char* dataset_directory,
                             bg_eval_report** out);
BG_API double bg_eval_report_mean_error(const bg_eval_report* report);
BG_API double bg_eval_report_bijectivity_rate(const bg_eval_report* report);
/* Tab-separated report text, valid until the report is destroyed. */
BG_API const char* bg_eval_report_text(const bg_eval_report* report);
BG_API void bg_eval_report_destroy(bg_eval_report* report);

#ifdef __cplusplus
}
#endif

#endif /* BENDGRAPH_BENDGRAPH_H */
