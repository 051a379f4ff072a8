/*
  Copyright (c) 2026 the nmtprune authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

  http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

/*
 * Public C API of libnmtprune: training, magnitude pruning, retraining and
 * redundancy analysis of small LSTM encoder-decoder translation models.
 *
 * All functions returning nmtp_status report NMTP_OK on success; on failure
 * the return code classifies the error and nmtp_last_error() carries a
 * message (thread-local, valid until the next failing call on the thread).
 * Handles are opaque; every open or load call pairs with the matching free.
 */

#ifndef NMTPRUNE_H
#define NMTPRUNE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nmtp_status {
    NMTP_OK = 0,
    NMTP_ERR_INVALID_ARGUMENT = 1,
    NMTP_ERR_IO = 2,
    NMTP_ERR_FORMAT = 3,
    NMTP_ERR_STATE = 4,
    NMTP_ERR_NUMERIC = 5,
    NMTP_ERR_INTERNAL = 6
} nmtp_status;

const char* nmtp_version(void);
const char* nmtp_status_name(nmtp_status status);
/* Message of the last failing call on this thread; empty string if none. */
const char* nmtp_last_error(void);

/* ------------------------------------------------------------------ */
/* Experiment manifests: "key = value" text files (see README for the  */
/* key reference). Flags set through nmtp_manifest_set override file   */
/* values.                                                             */

typedef struct nmtp_manifest nmtp_manifest;

nmtp_status nmtp_manifest_create(nmtp_manifest** out);
nmtp_status nmtp_manifest_open(const char* path, nmtp_manifest** out);
nmtp_status nmtp_manifest_set(nmtp_manifest* manifest, const char* key,
                              const char* value);
/* Copies the value for key into buf (NUL-terminated). Fails with
 * NMTP_ERR_INVALID_ARGUMENT when the key is absent or buf is too small. */
nmtp_status nmtp_manifest_get(const nmtp_manifest* manifest, const char* key,
                              char* buf, size_t buf_size);
void nmtp_manifest_free(nmtp_manifest* manifest);

/* ------------------------------------------------------------------ */
/* Models (checkpoints): weights, vocabularies, config, optional mask. */

typedef struct nmtp_model nmtp_model;

typedef struct nmtp_sparse_report {
    uint64_t sparse_bytes;
    uint64_t dense_bytes; /* dense serialization of the same model, no mask */
    double reduction;     /* 1 - sparse/dense */
} nmtp_sparse_report;

typedef struct nmtp_prune_report {
    double requested_fraction;
    double pruned_fraction;
    double lambda; /* class-distribution threshold factor, else 0 */
} nmtp_prune_report;

typedef struct nmtp_eval_report {
    double perplexity;
    double bleu; /* in [0, 1] */
    uint64_t tokens;
    uint64_t sentences;
} nmtp_eval_report;

/* Loads either checkpoint format (auto-detected). */
nmtp_status nmtp_model_load(const char* path, nmtp_model** out);
nmtp_status nmtp_model_save_dense(const nmtp_model* model, const char* path);
/* Requires a mask; report may be NULL. */
nmtp_status nmtp_model_save_sparse(const nmtp_model* model, const char* path,
                                   nmtp_sparse_report* report);
void nmtp_model_free(nmtp_model* model);

uint64_t nmtp_model_param_count(const nmtp_model* model);
int nmtp_model_class_count(const nmtp_model* model);
nmtp_status nmtp_model_class_name(const nmtp_model* model, int index, char* buf,
                                  size_t buf_size);
int nmtp_model_has_mask(const nmtp_model* model);
/* Retained fraction of one class (by index), or of the whole model when
 * index is -1. A model without mask reports 1.0 everywhere. */
nmtp_status nmtp_model_retained_fraction(const nmtp_model* model, int index,
                                         double* out);

/* Computes and applies a mask in place; scheme is "class-blind",
 * "class-uniform" or "class-distribution", x in [0, 1]. */
nmtp_status nmtp_model_prune(nmtp_model* model, const char* scheme, double x,
                             nmtp_prune_report* report);

/* ------------------------------------------------------------------ */
/* Pipeline commands. Every command is deterministic in the manifest   */
/* seed. Output files are documented in the README.                    */

/* Baseline training: writes <out_dir>/baseline.ckpt and train_log.csv. */
nmtp_status nmtp_train(const nmtp_manifest* manifest, const char* out_dir);

/* Masked retraining of a pruned model, in place; writes the log CSV when
 * log_csv_path is non-NULL. */
nmtp_status nmtp_retrain(const nmtp_manifest* manifest, nmtp_model* model,
                         const char* log_csv_path);

/* Fresh init trained under the mask of mask_source from step 0. */
nmtp_status nmtp_sparse_scratch(const nmtp_manifest* manifest,
                                const nmtp_model* mask_source,
                                const char* log_csv_path, nmtp_model** out);

/* split is "train", "valid" or "test". */
nmtp_status nmtp_eval(const nmtp_manifest* manifest, const nmtp_model* model,
                      const char* split, nmtp_eval_report* report);

/* Writes breakdown.csv, scatter.csv, per-class .pgm bitmaps, subgroups.csv
 * and pruned_words.csv into out_dir. bitmap_source is "percentile" (bottom-x
 * magnitudes per matrix) or "mask" (the model's stored mask). */
nmtp_status nmtp_analyze(const nmtp_manifest* manifest, const nmtp_model* model,
                         const char* scheme, double x, const char* bitmap_source,
                         const char* out_dir);

/* Meta-command: train, sweep all three schemes over x = 0.1..0.9, prune +
 * retrain + sparse-scratch at the manifest fraction, evaluate and analyze. */
nmtp_status nmtp_repro(const nmtp_manifest* manifest, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NMTPRUNE_H */
