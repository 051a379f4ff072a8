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

#ifndef NMTPRUNE_CORE_EXPERIMENT_HPP
#define NMTPRUNE_CORE_EXPERIMENT_HPP

#include <string>

#include "core/analyze.hpp"
#include "core/checkpoint.hpp"
#include "core/manifest.hpp"

namespace nmtprune {

// Encoded corpora plus the vocabularies they were encoded with.
struct DataBundle {
    Vocabulary source_vocab;
    Vocabulary target_vocab;
    Corpus train;
    Corpus valid;
    Corpus test;
};

// Synthetic task or file-based corpora, per the manifest.
DataBundle build_data(const Manifest& manifest);

// Rebuilds the manifest's corpus for an existing checkpoint, encoding with
// the checkpoint's vocabularies. Rejects vocabulary mismatches.
Corpus corpus_for_checkpoint(const Manifest& manifest, const Checkpoint& ckpt,
                             Split split);

ModelConfig model_config_from(const Manifest& manifest, std::size_t source_vocab,
                              std::size_t target_vocab);

TrainConfig baseline_train_config(const Manifest& manifest);
TrainConfig retrain_config(const Manifest& manifest);

// Trains a baseline from a fresh init; writes baseline.ckpt and
// train_log.csv into out_dir and returns the checkpoint.
Checkpoint run_train(const Manifest& manifest, const std::string& out_dir,
                     TrainLog* log_out = nullptr);

struct PruneOutcome {
    MaskStats stats;
    double lambda = 0.0; // class-distribution only
    double requested = 0.0;
};

// Computes the mask from current weights, applies it, and attaches it to
// the checkpoint (phase becomes pruned).
PruneOutcome run_prune(Checkpoint& ckpt, PruneScheme scheme, double x);

// Continues training under the checkpoint's mask with the retraining
// schedule; the checkpoint is updated in place (phase becomes retrain).
TrainLog run_retrain(const Manifest& manifest, Checkpoint& ckpt);

// Fresh random init trained under the mask of mask_source from step 0.
Checkpoint run_sparse_scratch(const Manifest& manifest, const Checkpoint& mask_source,
                              TrainLog* log_out = nullptr);

EvalReport run_eval(const Manifest& manifest, const Checkpoint& ckpt, Split split);

enum class BitmapSource { percentile, mask };

// Writes breakdown.csv, scatter.csv, per-class bitmaps, subgroups.csv and
// pruned_words.csv into out_dir, then cross-checks its own outputs.
void run_analyze(const Manifest& manifest, const Checkpoint& ckpt, PruneScheme scheme,
                 double x, const std::string& out_dir,
                 BitmapSource source = BitmapSource::percentile);

// Rows of the scheme-by-fraction perplexity sweep behind the repro command.
struct SweepPoint {
    PruneScheme scheme;
    double x = 0.0;
    double lambda = 0.0;
    double retained_fraction = 0.0;
    double perplexity = 0.0;
};

std::vector<SweepPoint> prune_sweep(const Checkpoint& baseline, const Corpus& corpus);
std::string sweep_csv(const std::vector<SweepPoint>& points);

// Full pipeline: train, sweep all three schemes, prune + retrain +
// sparse-scratch at the manifest's fraction, evaluate everything, and emit
// the analysis artifacts.
void run_repro(const Manifest& manifest, const std::string& out_dir);

// Small file helpers shared by the pipeline and the C API.
void ensure_directory(const std::string& dir);
void write_text_file(const std::string& path, const std::string& content);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_EXPERIMENT_HPP
