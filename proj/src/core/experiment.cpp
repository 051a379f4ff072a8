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

#include "core/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/errors.hpp"
#include "core/model.hpp"

namespace nmtprune {

namespace {

// Seed roles derived from the single manifest seed.
enum SeedRole : std::uint64_t {
    kDataTrain = 0,
    kDataValid = 1,
    kDataTest = 2,
    kInit = 3,
    kTrainLoop = 4,
    kScratchInit = 5,
    kScratchLoop = 6,
};

std::uint64_t seed_for(const Manifest& manifest, SeedRole role) {
    return manifest.get_u64("seed", 42) * 1000003ULL + role;
}

struct SyntheticSpec {
    std::size_t vocab;
    std::size_t train_pairs;
    std::size_t valid_pairs;
    std::size_t test_pairs;
    std::size_t min_len;
    std::size_t max_len;
};

SyntheticSpec synthetic_spec(const Manifest& manifest) {
    SyntheticSpec spec;
    spec.vocab = manifest.get_size("synthetic.vocab", 20);
    spec.train_pairs = manifest.get_size("synthetic.train_pairs", 5000);
    spec.valid_pairs = manifest.get_size("synthetic.valid_pairs", 500);
    spec.test_pairs = manifest.get_size("synthetic.test_pairs", 500);
    spec.min_len = manifest.get_size("synthetic.min_len", 3);
    spec.max_len = manifest.get_size("synthetic.max_len", 8);
    return spec;
}

std::size_t decode_max_len(const Manifest& manifest) {
    return manifest.get_size("eval.max_decode", 64);
}

} // namespace

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw_io("cannot create directory " + dir + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) ensure_directory(parent.string());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw_io("write failed: " + path);
}

DataBundle build_data(const Manifest& manifest) {
    const std::string task = manifest.get_string("task", "synthetic");
    DataBundle data;
    if (task == "synthetic") {
        const SyntheticSpec spec = synthetic_spec(manifest);
        data.source_vocab = synthetic_vocab(spec.vocab);
        data.target_vocab = data.source_vocab;
        data.train = gen_synthetic_reversal(spec.vocab, spec.train_pairs, spec.min_len,
                                            spec.max_len,
                                            seed_for(manifest, kDataTrain),
                                            Split::train);
        data.valid = gen_synthetic_reversal(spec.vocab, spec.valid_pairs, spec.min_len,
                                            spec.max_len,
                                            seed_for(manifest, kDataValid),
                                            Split::valid);
        data.test = gen_synthetic_reversal(spec.vocab, spec.test_pairs, spec.min_len,
                                           spec.max_len, seed_for(manifest, kDataTest),
                                           Split::test);
        return data;
    }
    if (task != "files") {
        throw_invalid("manifest: task must be synthetic or files, got " + task);
    }
    const auto train_src = read_tokenized_lines(manifest.require_string("data.train_source"));
    const auto train_tgt = read_tokenized_lines(manifest.require_string("data.train_target"));
    const auto valid_src = read_tokenized_lines(manifest.require_string("data.valid_source"));
    const auto valid_tgt = read_tokenized_lines(manifest.require_string("data.valid_target"));
    const auto test_src = read_tokenized_lines(manifest.require_string("data.test_source"));
    const auto test_tgt = read_tokenized_lines(manifest.require_string("data.test_target"));
    data.source_vocab = Vocabulary::build(train_src, manifest.get_size("vocab.source", 10000));
    data.target_vocab = Vocabulary::build(train_tgt, manifest.get_size("vocab.target", 10000));
    data.train = encode_corpus(train_src, train_tgt, data.source_vocab,
                               data.target_vocab, Split::train);
    data.valid = encode_corpus(valid_src, valid_tgt, data.source_vocab,
                               data.target_vocab, Split::valid);
    data.test = encode_corpus(test_src, test_tgt, data.source_vocab,
                              data.target_vocab, Split::test);
    return data;
}

Corpus corpus_for_checkpoint(const Manifest& manifest, const Checkpoint& ckpt,
                             Split split) {
    const std::string task = manifest.get_string("task", "synthetic");
    if (task == "synthetic") {
        const SyntheticSpec spec = synthetic_spec(manifest);
        const Vocabulary expected = synthetic_vocab(spec.vocab);
        if (!(expected == ckpt.source_vocab) || !(expected == ckpt.target_vocab)) {
            throw_invalid("checkpoint vocabulary does not match the manifest's "
                          "synthetic task (vocab " + std::to_string(spec.vocab) + ")");
        }
        switch (split) {
        case Split::train:
            return gen_synthetic_reversal(spec.vocab, spec.train_pairs, spec.min_len,
                                          spec.max_len, seed_for(manifest, kDataTrain),
                                          split);
        case Split::valid:
            return gen_synthetic_reversal(spec.vocab, spec.valid_pairs, spec.min_len,
                                          spec.max_len, seed_for(manifest, kDataValid),
                                          split);
        case Split::test:
            return gen_synthetic_reversal(spec.vocab, spec.test_pairs, spec.min_len,
                                          spec.max_len, seed_for(manifest, kDataTest),
                                          split);
        }
    }
    if (task != "files") {
        throw_invalid("manifest: task must be synthetic or files, got " + task);
    }
    const char* src_key = split == Split::train ? "data.train_source"
                          : split == Split::valid ? "data.valid_source"
                                                  : "data.test_source";
    const char* tgt_key = split == Split::train ? "data.train_target"
                          : split == Split::valid ? "data.valid_target"
                                                  : "data.test_target";
    const auto src = read_tokenized_lines(manifest.require_string(src_key));
    const auto tgt = read_tokenized_lines(manifest.require_string(tgt_key));
    return encode_corpus(src, tgt, ckpt.source_vocab, ckpt.target_vocab, split);
}

ModelConfig model_config_from(const Manifest& manifest, std::size_t source_vocab,
                              std::size_t target_vocab) {
    ModelConfig config;
    config.layers = manifest.get_size("model.layers", 2);
    config.hidden = manifest.get_size("model.hidden", 32);
    config.dropout = manifest.get_double("model.dropout", 0.2);
    config.source_vocab = source_vocab;
    config.target_vocab = target_vocab;
    config.validate();
    return config;
}

TrainConfig baseline_train_config(const Manifest& manifest) {
    TrainConfig config;
    config.learning_rate = manifest.get_double("train.lr", 1.0);
    config.epochs = manifest.get_size("train.epochs", 12);
    config.batch_size = manifest.get_size("train.batch", 32);
    config.max_grad_norm = manifest.get_double("train.max_norm", 5.0);
    config.dropout = manifest.get_double("model.dropout", 0.2);
    config.schedule = parse_schedule(manifest.get_string("train.schedule", "constant"));
    config.patience = manifest.get_size("train.patience", 2);
    config.seed = seed_for(manifest, kTrainLoop);
    config.phase = Phase::baseline;
    config.validate();
    return config;
}

TrainConfig retrain_config(const Manifest& manifest) {
    TrainConfig config;
    config.learning_rate = manifest.get_double("retrain.lr", 0.5);
    config.epochs = manifest.get_size("retrain.epochs", 4);
    config.batch_size = manifest.get_size("train.batch", 32);
    config.max_grad_norm = manifest.get_double("train.max_norm", 5.0);
    config.dropout = manifest.get_double("model.dropout", 0.2);
    config.schedule =
        parse_schedule(manifest.get_string("retrain.schedule", "halve-after-two"));
    config.patience = manifest.get_size("retrain.patience", 0);
    config.seed = seed_for(manifest, kTrainLoop) + 7919;
    config.phase = Phase::retrain;
    config.validate();
    return config;
}

Checkpoint run_train(const Manifest& manifest, const std::string& out_dir,
                     TrainLog* log_out) {
    ensure_directory(out_dir);
    const DataBundle data = build_data(manifest);
    const ModelConfig config = model_config_from(manifest, data.source_vocab.size(),
                                                 data.target_vocab.size());

    Checkpoint ckpt;
    ckpt.registry = init_weights(config, seed_for(manifest, kInit));
    ckpt.source_vocab = data.source_vocab;
    ckpt.target_vocab = data.target_vocab;
    ckpt.seed = manifest.get_u64("seed", 42);
    ckpt.phase = Phase::baseline;

    const TrainConfig train_config = baseline_train_config(manifest);
    TrainLog log = train(ckpt.registry, data.train, data.valid, train_config);
    write_text_file(out_dir + "/train_log.csv", log.to_csv());
    if (log.diverged) {
        throw_numeric("training diverged; partial log written to " + out_dir +
                      "/train_log.csv");
    }
    save_dense(ckpt, out_dir + "/baseline.ckpt");
    if (log_out != nullptr) *log_out = std::move(log);
    return ckpt;
}

PruneOutcome run_prune(Checkpoint& ckpt, PruneScheme scheme, double x) {
    PruneOutcome outcome;
    outcome.requested = x;
    PruneMask mask = compute_mask(ckpt.registry, scheme, x, &outcome.lambda);
    apply_mask(ckpt.registry, mask);
    outcome.stats = mask_stats(mask);
    ckpt.mask = std::move(mask);
    ckpt.phase = Phase::pruned;
    return outcome;
}

TrainLog run_retrain(const Manifest& manifest, Checkpoint& ckpt) {
    if (!ckpt.mask.has_value()) {
        throw_state("retrain: checkpoint carries no mask");
    }
    const DataBundle data = build_data(manifest);
    if (!(data.source_vocab == ckpt.source_vocab) ||
        !(data.target_vocab == ckpt.target_vocab)) {
        throw_invalid("retrain: checkpoint vocabulary does not match the manifest");
    }
    TrainConfig config = retrain_config(manifest);
    config.mask = &ckpt.mask.value();
    TrainLog log = train(ckpt.registry, data.train, data.valid, config);
    if (log.diverged) throw_numeric("retraining diverged");
    ckpt.phase = Phase::retrain;
    return log;
}

Checkpoint run_sparse_scratch(const Manifest& manifest, const Checkpoint& mask_source,
                              TrainLog* log_out) {
    if (!mask_source.mask.has_value()) {
        throw_state("sparse-scratch: source checkpoint carries no mask");
    }
    const DataBundle data = build_data(manifest);
    if (!(data.source_vocab == mask_source.source_vocab) ||
        !(data.target_vocab == mask_source.target_vocab)) {
        throw_invalid("sparse-scratch: checkpoint vocabulary does not match the "
                      "manifest");
    }

    Checkpoint ckpt;
    ckpt.registry = init_weights(mask_source.config(),
                                 seed_for(manifest, kScratchInit));
    ckpt.source_vocab = mask_source.source_vocab;
    ckpt.target_vocab = mask_source.target_vocab;
    ckpt.mask = mask_source.mask;
    ckpt.seed = manifest.get_u64("seed", 42);
    ckpt.phase = Phase::sparse_scratch;

    // The sparse structure holds from step 0.
    apply_mask(ckpt.registry, *ckpt.mask);

    TrainConfig config = baseline_train_config(manifest);
    config.seed = seed_for(manifest, kScratchLoop);
    config.phase = Phase::sparse_scratch;
    config.mask = &ckpt.mask.value();
    TrainLog log = train(ckpt.registry, data.train, data.valid, config);
    if (log.diverged) throw_numeric("sparse-scratch training diverged");
    if (log_out != nullptr) *log_out = std::move(log);
    return ckpt;
}

EvalReport run_eval(const Manifest& manifest, const Checkpoint& ckpt, Split split) {
    const Corpus corpus = corpus_for_checkpoint(manifest, ckpt, split);
    return evaluate(ckpt.registry, corpus, decode_max_len(manifest));
}

void run_analyze(const Manifest& manifest, const Checkpoint& ckpt, PruneScheme scheme,
                 double x, const std::string& out_dir, BitmapSource source) {
    ensure_directory(out_dir);
    const Corpus corpus = corpus_for_checkpoint(manifest, ckpt, Split::valid);

    const std::vector<BreakdownRow> rows =
        class_breakdown(ckpt.registry, corpus, scheme, x);
    write_text_file(out_dir + "/breakdown.csv", breakdown_csv(rows));
    write_text_file(out_dir + "/scatter.csv", scatter_csv(rows));

    // The mask the bitmaps, subgroup report and pruned-word report describe.
    PruneMask mask;
    if (source == BitmapSource::mask) {
        if (!ckpt.mask.has_value()) {
            throw_state("analyze: bitmap source 'mask' needs a pruned checkpoint");
        }
        mask = *ckpt.mask;
    } else {
        mask = compute_mask(ckpt.registry, scheme, x);
    }

    for (std::size_t c = 0; c < ckpt.registry.class_count(); ++c) {
        const auto& entry = ckpt.registry.entries()[c];
        MaskMatrix bitmap = source == BitmapSource::percentile
                                ? redundancy_bitmap(entry.weights, x)
                                : mask.entries[c].mask;
        if (source == BitmapSource::percentile) {
            const std::size_t expected_black = static_cast<std::size_t>(
                std::floor(x * static_cast<double>(entry.weights.size())));
            if (bitmap.size() - bitmap.retained() != expected_black) {
                throw Error(ErrorCode::internal,
                            "analyze: bitmap black-pixel count self-check failed for " +
                                entry.id.name());
            }
        }
        write_text_file(out_dir + "/" + entry.id.name() + ".pgm", to_pgm(bitmap));
    }

    const MaskStats stats = mask_stats(mask);
    std::string subgroups = "class,gate,input,retained_fraction\n";
    char buf[192];
    for (std::size_t c = 0; c < mask.entries.size(); ++c) {
        const auto& entry = mask.entries[c];
        const bool is_layer = entry.id.kind == WeightClassKind::source_layer ||
                              entry.id.kind == WeightClassKind::target_layer;
        if (!is_layer) continue;
        const std::array<double, 8> fractions = subgroup_retention(entry.mask);
        double mean = 0.0;
        for (std::size_t g = 0; g < 4; ++g) {
            for (std::size_t i = 0; i < 2; ++i) {
                std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.8f\n",
                              entry.id.name().c_str(), kGateNames[g], kInputNames[i],
                              fractions[g * 2 + i]);
                subgroups += buf;
                mean += fractions[g * 2 + i];
            }
        }
        mean /= 8.0;
        if (std::abs(mean - stats.per_class[c].retained_fraction) > 1e-12) {
            throw Error(ErrorCode::internal,
                        "analyze: subgroup retention self-check failed for " +
                            entry.id.name());
        }
    }
    write_text_file(out_dir + "/subgroups.csv", subgroups);

    std::string pruned_words = "class,column,token\n";
    for (const auto& entry : mask.entries) {
        const Vocabulary* vocab = nullptr;
        if (entry.id.kind == WeightClassKind::source_embedding) {
            vocab = &ckpt.source_vocab;
        } else if (entry.id.kind == WeightClassKind::target_embedding) {
            vocab = &ckpt.target_vocab;
        } else {
            continue;
        }
        for (std::size_t column : pruned_out_words(entry.mask)) {
            pruned_words += entry.id.name() + "," + std::to_string(column) + "," +
                            vocab->word(static_cast<TokenId>(column)) + "\n";
        }
    }
    write_text_file(out_dir + "/pruned_words.csv", pruned_words);
}

std::vector<SweepPoint> prune_sweep(const Checkpoint& baseline, const Corpus& corpus) {
    std::vector<SweepPoint> points;
    const PruneScheme schemes[] = {PruneScheme::class_blind, PruneScheme::class_uniform,
                                   PruneScheme::class_distribution};
    for (PruneScheme scheme : schemes) {
        for (int step = 1; step <= 9; ++step) {
            SweepPoint point;
            point.scheme = scheme;
            point.x = 0.1 * step;
            PruneMask mask =
                compute_mask(baseline.registry, scheme, point.x, &point.lambda);
            ClassRegistry pruned = baseline.registry;
            apply_mask(pruned, mask);
            point.retained_fraction = mask_stats(mask).retained_fraction;
            point.perplexity = perplexity(pruned, corpus);
            points.push_back(point);
        }
    }
    return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string out = "scheme,x,lambda,retained_fraction,perplexity\n";
    char buf[160];
    for (const SweepPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%s,%.2f,%.8g,%.6f,%.6f\n",
                      scheme_name(p.scheme), p.x, p.lambda, p.retained_fraction,
                      p.perplexity);
        out += buf;
    }
    return out;
}

void run_repro(const Manifest& manifest, const std::string& out_dir) {
    ensure_directory(out_dir);
    const double x = manifest.get_double("prune.x", 0.8);
    const PruneScheme scheme =
        parse_scheme(manifest.get_string("prune.scheme", "class-blind"));

    TrainLog train_log;
    Checkpoint baseline = run_train(manifest, out_dir, &train_log);
    const Corpus valid = corpus_for_checkpoint(manifest, baseline, Split::valid);

    // Perplexity-vs-fraction curves for all three schemes.
    const std::vector<SweepPoint> sweep = prune_sweep(baseline, valid);
    write_text_file(out_dir + "/sweep.csv", sweep_csv(sweep));

    // Scheme comparison is recorded, not asserted: it is an empirical
    // finding, and desk-scale runs may deviate from the full-scale result.
    std::string comparison;
    int blind_best = 0;
    for (int step = 1; step <= 9; ++step) {
        double best_ppl = 0.0;
        const char* best = nullptr;
        double blind_ppl = 0.0;
        for (const SweepPoint& p : sweep) {
            if (std::abs(p.x - 0.1 * step) > 1e-9) continue;
            if (p.scheme == PruneScheme::class_blind) blind_ppl = p.perplexity;
            if (best == nullptr || p.perplexity < best_ppl) {
                best_ppl = p.perplexity;
                best = scheme_name(p.scheme);
            }
        }
        char line[160];
        std::snprintf(line, sizeof(line),
                      "x=%.1f best=%s ppl=%.4f class-blind=%.4f\n", 0.1 * step, best,
                      best_ppl, blind_ppl);
        comparison += line;
        if (std::string(best) == "class-blind") ++blind_best;
    }
    comparison += "class-blind lowest perplexity at " + std::to_string(blind_best) +
                  "/9 fractions\n";
    write_text_file(out_dir + "/scheme_comparison.txt", comparison);

    // Prune at the manifest fraction, keep both checkpoint formats.
    Checkpoint pruned = baseline;
    run_prune(pruned, scheme, x);
    save_dense(pruned, out_dir + "/pruned.ckpt");
    const SparseReport storage = save_sparse(pruned, out_dir + "/pruned.sparse.ckpt");
    {
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "format,bytes,reduction\nsparse,%llu,%.6f\ndense,%llu,0\n",
                      static_cast<unsigned long long>(storage.sparse_bytes),
                      storage.reduction,
                      static_cast<unsigned long long>(storage.dense_bytes));
        write_text_file(out_dir + "/storage.csv", buf);
    }
    const double pruned_valid_loss = corpus_mean_loss(pruned.registry, valid);

    // Retrain under the mask.
    Checkpoint retrained = pruned;
    TrainLog retrain_log = run_retrain(manifest, retrained);
    write_text_file(out_dir + "/retrain_log.csv", retrain_log.to_csv());
    save_dense(retrained, out_dir + "/retrained.ckpt");

    // Sparse from scratch with the same structure.
    TrainLog scratch_log;
    Checkpoint scratch = run_sparse_scratch(manifest, pruned, &scratch_log);
    write_text_file(out_dir + "/sparse_scratch_log.csv", scratch_log.to_csv());
    save_dense(scratch, out_dir + "/sparse_scratch.ckpt");

    // Loss curve over the train -> prune -> retrain sequence. The pruned
    // point sits at the baseline's final epoch position.
    {
        const double baseline_end =
            train_log.records.empty() ? 0.0 : train_log.records.back().epoch;
        std::string curve = train_log.to_csv();
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.4f,pruned,0,%.8g,%.8g\n", baseline_end,
                      pruned_valid_loss, pruned_valid_loss);
        curve += buf;
        TrainLog shifted = retrain_log;
        for (TrainRecord& r : shifted.records) r.epoch += baseline_end;
        shifted.append_csv_rows(curve);
        write_text_file(out_dir + "/loss_curve.csv", curve);
    }

    // Metric summary for every phase.
    {
        std::string summary = "phase,split,perplexity,bleu,tokens,sentences\n";
        char buf[200];
        const struct {
            const char* name;
            const Checkpoint* ckpt;
        } rows[] = {{"baseline", &baseline},
                    {"pruned", &pruned},
                    {"retrain", &retrained},
                    {"sparse-scratch", &scratch}};
        for (const auto& row : rows) {
            for (Split split : {Split::valid, Split::test}) {
                const EvalReport report = run_eval(manifest, *row.ckpt, split);
                std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%zu,%zu\n", row.name,
                              split_name(split), report.perplexity, report.bleu,
                              report.tokens, report.sentences);
                summary += buf;
            }
        }
        write_text_file(out_dir + "/summary.csv", summary);
    }

    // Per-class breakdown at the analysis fraction for all three schemes,
    // scatter from class-uniform, bitmaps from the pruned model's actual
    // mask.
    {
        const double ax = manifest.get_double("analyze.x", 0.9);
        std::string all_rows;
        std::vector<BreakdownRow> uniform_rows;
        for (PruneScheme s : {PruneScheme::class_blind, PruneScheme::class_uniform,
                              PruneScheme::class_distribution}) {
            const auto rows = class_breakdown(baseline.registry, valid, s, ax);
            std::string csv = breakdown_csv(rows);
            if (all_rows.empty()) {
                all_rows = csv;
            } else {
                all_rows += csv.substr(csv.find('\n') + 1);
            }
            if (s == PruneScheme::class_uniform) uniform_rows = rows;
        }
        write_text_file(out_dir + "/breakdown.csv", all_rows);
        write_text_file(out_dir + "/scatter.csv", scatter_csv(uniform_rows));
    }
    run_analyze(manifest, pruned, scheme, x, out_dir + "/bitmaps",
                BitmapSource::mask);
}

} // namespace nmtprune
