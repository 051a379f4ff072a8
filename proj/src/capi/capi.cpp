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

#include "nmtprune.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "core/checkpoint.hpp"
#include "core/errors.hpp"
#include "core/experiment.hpp"
#include "core/manifest.hpp"

using namespace nmtprune;

struct nmtp_manifest {
    Manifest manifest;
};

struct nmtp_model {
    Checkpoint checkpoint;
};

namespace {

thread_local std::string g_last_error;

nmtp_status status_from(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return NMTP_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return NMTP_ERR_IO;
    case ErrorCode::format: return NMTP_ERR_FORMAT;
    case ErrorCode::state: return NMTP_ERR_STATE;
    case ErrorCode::numeric: return NMTP_ERR_NUMERIC;
    case ErrorCode::internal: return NMTP_ERR_INTERNAL;
    }
    return NMTP_ERR_INTERNAL;
}

nmtp_status fail(nmtp_status status, const char* message) {
    g_last_error = message;
    return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
nmtp_status guarded(Fn&& fn) {
    try {
        fn();
        return NMTP_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_from(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return NMTP_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return NMTP_ERR_INTERNAL;
    }
}

nmtp_status copy_string(const std::string& value, char* buf, size_t buf_size) {
    if (buf == nullptr || buf_size < value.size() + 1) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "buffer too small");
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
    return NMTP_OK;
}

Split parse_split(const char* split) {
    const std::string s = split == nullptr ? "" : split;
    if (s == "train") return Split::train;
    if (s == "valid") return Split::valid;
    if (s == "test") return Split::test;
    throw_invalid("split must be train, valid or test, got '" + s + "'");
}

} // namespace

extern "C" {

const char* nmtp_version(void) { return "1.0.0"; }

const char* nmtp_status_name(nmtp_status status) {
    switch (status) {
    case NMTP_OK: return "ok";
    case NMTP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NMTP_ERR_IO: return "io error";
    case NMTP_ERR_FORMAT: return "format error";
    case NMTP_ERR_STATE: return "invalid state";
    case NMTP_ERR_NUMERIC: return "numeric error";
    case NMTP_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

const char* nmtp_last_error(void) { return g_last_error.c_str(); }

nmtp_status nmtp_manifest_create(nmtp_manifest** out) {
    if (out == nullptr) return fail(NMTP_ERR_INVALID_ARGUMENT, "out is NULL");
    return guarded([&] { *out = new nmtp_manifest{}; });
}

nmtp_status nmtp_manifest_open(const char* path, nmtp_manifest** out) {
    if (path == nullptr || out == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "path or out is NULL");
    }
    return guarded([&] { *out = new nmtp_manifest{Manifest::from_file(path)}; });
}

nmtp_status nmtp_manifest_set(nmtp_manifest* manifest, const char* key,
                              const char* value) {
    if (manifest == nullptr || key == nullptr || value == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "manifest, key or value is NULL");
    }
    return guarded([&] { manifest->manifest.set(key, value); });
}

nmtp_status nmtp_manifest_get(const nmtp_manifest* manifest, const char* key,
                              char* buf, size_t buf_size) {
    if (manifest == nullptr || key == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "manifest or key is NULL");
    }
    nmtp_status status = NMTP_OK;
    nmtp_status guard = guarded([&] {
        if (!manifest->manifest.has(key)) {
            throw_invalid("manifest has no key: " + std::string(key));
        }
        status = copy_string(manifest->manifest.require_string(key), buf, buf_size);
    });
    return guard != NMTP_OK ? guard : status;
}

void nmtp_manifest_free(nmtp_manifest* manifest) { delete manifest; }

nmtp_status nmtp_model_load(const char* path, nmtp_model** out) {
    if (path == nullptr || out == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "path or out is NULL");
    }
    return guarded([&] { *out = new nmtp_model{load_checkpoint(path)}; });
}

nmtp_status nmtp_model_save_dense(const nmtp_model* model, const char* path) {
    if (model == nullptr || path == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "model or path is NULL");
    }
    return guarded([&] { save_dense(model->checkpoint, path); });
}

nmtp_status nmtp_model_save_sparse(const nmtp_model* model, const char* path,
                                   nmtp_sparse_report* report) {
    if (model == nullptr || path == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "model or path is NULL");
    }
    return guarded([&] {
        const SparseReport r = save_sparse(model->checkpoint, path);
        if (report != nullptr) {
            report->sparse_bytes = r.sparse_bytes;
            report->dense_bytes = r.dense_bytes;
            report->reduction = r.reduction;
        }
    });
}

void nmtp_model_free(nmtp_model* model) { delete model; }

uint64_t nmtp_model_param_count(const nmtp_model* model) {
    return model == nullptr ? 0 : model->checkpoint.registry.param_count();
}

int nmtp_model_class_count(const nmtp_model* model) {
    return model == nullptr
               ? 0
               : static_cast<int>(model->checkpoint.registry.class_count());
}

nmtp_status nmtp_model_class_name(const nmtp_model* model, int index, char* buf,
                                  size_t buf_size) {
    if (model == nullptr) return fail(NMTP_ERR_INVALID_ARGUMENT, "model is NULL");
    const auto& entries = model->checkpoint.registry.entries();
    if (index < 0 || static_cast<std::size_t>(index) >= entries.size()) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "class index out of range");
    }
    return copy_string(entries[static_cast<std::size_t>(index)].id.name(), buf,
                       buf_size);
}

int nmtp_model_has_mask(const nmtp_model* model) {
    return model != nullptr && model->checkpoint.mask.has_value() ? 1 : 0;
}

nmtp_status nmtp_model_retained_fraction(const nmtp_model* model, int index,
                                         double* out) {
    if (model == nullptr || out == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "model or out is NULL");
    }
    const auto& ckpt = model->checkpoint;
    const int classes = static_cast<int>(ckpt.registry.class_count());
    if (index < -1 || index >= classes) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "class index out of range");
    }
    if (!ckpt.mask.has_value()) {
        *out = 1.0;
        return NMTP_OK;
    }
    const MaskStats stats = mask_stats(*ckpt.mask);
    *out = index == -1 ? stats.retained_fraction
                       : stats.per_class[static_cast<std::size_t>(index)]
                             .retained_fraction;
    return NMTP_OK;
}

nmtp_status nmtp_model_prune(nmtp_model* model, const char* scheme, double x,
                             nmtp_prune_report* report) {
    if (model == nullptr || scheme == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "model or scheme is NULL");
    }
    return guarded([&] {
        const PruneOutcome outcome =
            run_prune(model->checkpoint, parse_scheme(scheme), x);
        if (report != nullptr) {
            report->requested_fraction = outcome.requested;
            report->pruned_fraction = 1.0 - outcome.stats.retained_fraction;
            report->lambda = outcome.lambda;
        }
    });
}

nmtp_status nmtp_train(const nmtp_manifest* manifest, const char* out_dir) {
    if (manifest == nullptr || out_dir == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "manifest or out_dir is NULL");
    }
    return guarded([&] { run_train(manifest->manifest, out_dir); });
}

nmtp_status nmtp_retrain(const nmtp_manifest* manifest, nmtp_model* model,
                         const char* log_csv_path) {
    if (manifest == nullptr || model == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "manifest or model is NULL");
    }
    return guarded([&] {
        const TrainLog log = run_retrain(manifest->manifest, model->checkpoint);
        if (log_csv_path != nullptr) write_text_file(log_csv_path, log.to_csv());
    });
}

nmtp_status nmtp_sparse_scratch(const nmtp_manifest* manifest,
                                const nmtp_model* mask_source,
                                const char* log_csv_path, nmtp_model** out) {
    if (manifest == nullptr || mask_source == nullptr || out == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "manifest, mask_source or out is NULL");
    }
    return guarded([&] {
        TrainLog log;
        Checkpoint ckpt =
            run_sparse_scratch(manifest->manifest, mask_source->checkpoint, &log);
        if (log_csv_path != nullptr) write_text_file(log_csv_path, log.to_csv());
        *out = new nmtp_model{std::move(ckpt)};
    });
}

nmtp_status nmtp_eval(const nmtp_manifest* manifest, const nmtp_model* model,
                      const char* split, nmtp_eval_report* report) {
    if (manifest == nullptr || model == nullptr || report == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "manifest, model or report is NULL");
    }
    return guarded([&] {
        const EvalReport r =
            run_eval(manifest->manifest, model->checkpoint, parse_split(split));
        report->perplexity = r.perplexity;
        report->bleu = r.bleu;
        report->tokens = r.tokens;
        report->sentences = r.sentences;
    });
}

nmtp_status nmtp_analyze(const nmtp_manifest* manifest, const nmtp_model* model,
                         const char* scheme, double x, const char* bitmap_source,
                         const char* out_dir) {
    if (manifest == nullptr || model == nullptr || scheme == nullptr ||
        out_dir == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT,
                    "manifest, model, scheme or out_dir is NULL");
    }
    return guarded([&] {
        BitmapSource source = BitmapSource::percentile;
        const std::string src =
            bitmap_source == nullptr ? "percentile" : bitmap_source;
        if (src == "mask") {
            source = BitmapSource::mask;
        } else if (src != "percentile") {
            throw_invalid("bitmap source must be percentile or mask, got '" + src +
                          "'");
        }
        run_analyze(manifest->manifest, model->checkpoint, parse_scheme(scheme), x,
                    out_dir, source);
    });
}

nmtp_status nmtp_repro(const nmtp_manifest* manifest, const char* out_dir) {
    if (manifest == nullptr || out_dir == nullptr) {
        return fail(NMTP_ERR_INVALID_ARGUMENT, "manifest or out_dir is NULL");
    }
    return guarded([&] { run_repro(manifest->manifest, out_dir); });
}

} // extern "C"
