// Copyright 2026 The QHM Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the QHM library. Every entry point returns a qhm_status;
 * on failure a message is available from qhm_last_error() on the calling
 * thread. Strings handed out by the library are released with
 * qhm_string_free. Handles are opaque and owned by the caller. */

#ifndef QHM_QHM_H
#define QHM_QHM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(QHM_BUILDING_LIBRARY)
#define QHM_API __declspec(dllexport)
#else
#define QHM_API __declspec(dllimport)
#endif
#else
#define QHM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qhm_status {
  QHM_OK = 0,
  QHM_ERR_INVALID_ARGUMENT = 1,
  QHM_ERR_RANGE = 2,
  QHM_ERR_VALIDATION = 3,
  QHM_ERR_CONFIG = 4,
  QHM_ERR_NUMERIC = 5,
  QHM_ERR_DIVERGED = 6,
  QHM_ERR_BOUND_VIOLATION = 7,
  QHM_ERR_IO = 8,
  QHM_ERR_INTERNAL = 9
} qhm_status;

typedef struct qhm_config qhm_config;
typedef struct qhm_plan qhm_plan;
typedef struct qhm_problem qhm_problem;
typedef struct qhm_optimizer qhm_optimizer;

/* Receives one progress line (no trailing newline). */
typedef void (*qhm_log_fn)(const char* line, void* user);

QHM_API const char* qhm_version(void);
QHM_API const char* qhm_status_name(qhm_status s);

/* Message of the last failed call on this thread, "" if none. */
QHM_API const char* qhm_last_error(void);
QHM_API void qhm_string_free(char* s);

/* ---- configuration ---- */

QHM_API qhm_status qhm_config_parse(const char* json_text, qhm_config** out);
QHM_API qhm_status qhm_config_load(const char* path, qhm_config** out);
QHM_API void qhm_config_free(qhm_config* c);
QHM_API qhm_status qhm_config_set_seeds(qhm_config* c, const uint64_t* seeds, size_t count);
QHM_API qhm_status qhm_config_set_output_dir(qhm_config* c, const char* dir);
/* 16 hex digits, FNV-1a 64 of the canonical config. */
QHM_API qhm_status qhm_config_hash(const qhm_config* c, char** out_hex);
QHM_API qhm_status qhm_config_to_json(const qhm_config* c, char** out_json);

/* ---- experiments ---- */

/* Trains every seed and writes CSVs plus summary.json. Returns
 * QHM_ERR_DIVERGED when any seed diverged; the summary is still produced. */
QHM_API qhm_status qhm_run(const qhm_config* c, qhm_log_fn log, void* user,
                           char** out_summary_json);

/* Bound report without training. Writes <out_dir>/bounds.json when out_dir
 * is non-NULL. Returns QHM_ERR_BOUND_VIOLATION, with the report, when an
 * applicable domination fails. */
QHM_API qhm_status qhm_bounds(const qhm_config* c, const char* out_dir, char** out_report_json);

/* Grid sweep over a base config (JSON text). `seeds` overrides the base
 * seeds when count > 0. */
QHM_API qhm_status qhm_sweep(const char* base_json, const char* grid_json, const char* out_dir,
                             const uint64_t* seeds, size_t count, qhm_log_fn log, void* user,
                             char** out_leaderboard_json);

/* Heavy-ball hyperparameter conversion. */
QHM_API qhm_status qhm_convert_nshb_to_shb(double alpha, double beta, double* alpha_out,
                                           double* beta_out);
QHM_API qhm_status qhm_convert_shb_to_nshb(double alpha, double beta, double* alpha_out,
                                           double* beta_out);

/* ---- step plan ---- */

QHM_API qhm_status qhm_plan_create(const qhm_config* c, qhm_plan** out);
QHM_API void qhm_plan_free(qhm_plan* p);
QHM_API int64_t qhm_plan_steps(const qhm_plan* p);
QHM_API int64_t qhm_plan_epochs(const qhm_plan* p);
QHM_API qhm_status qhm_plan_step(const qhm_plan* p, int64_t k, double* alpha, double* beta,
                                 double* gamma, int64_t* batch);

/* ---- problems ---- */

QHM_API qhm_status qhm_problem_create(const qhm_config* c, qhm_problem** out);
QHM_API void qhm_problem_free(qhm_problem* p);
QHM_API size_t qhm_problem_dim(const qhm_problem* p);
QHM_API size_t qhm_problem_n(const qhm_problem* p);
QHM_API qhm_status qhm_problem_loss(const qhm_problem* p, const double* x, size_t dim,
                                    double* out);
QHM_API qhm_status qhm_problem_full_grad(const qhm_problem* p, const double* x, size_t dim,
                                         double* out);

/* ---- optimizer state ---- */

/* kind: "qhm", "nshb", "shb" or "sgd". */
QHM_API qhm_status qhm_optimizer_create(const char* kind, const double* x0, size_t dim,
                                        qhm_optimizer** out);
QHM_API void qhm_optimizer_free(qhm_optimizer* o);
/* beta is ignored by sgd, gamma by everything but qhm. */
QHM_API qhm_status qhm_optimizer_step(qhm_optimizer* o, const double* grad, size_t dim,
                                      double alpha, double beta, double gamma);
QHM_API qhm_status qhm_optimizer_position(const qhm_optimizer* o, double* x_out, size_t dim);
QHM_API int64_t qhm_optimizer_steps(const qhm_optimizer* o);

#ifdef __cplusplus
}
#endif

#endif /* QHM_QHM_H */
