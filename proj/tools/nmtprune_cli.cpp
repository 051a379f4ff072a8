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

// Command-line driver for the pruning pipeline; everything goes through the
// public C API in nmtprune.h.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nmtprune.h"

namespace {

struct ManifestDeleter {
    void operator()(nmtp_manifest* m) const { nmtp_manifest_free(m); }
};
struct ModelDeleter {
    void operator()(nmtp_model* m) const { nmtp_model_free(m); }
};
using ManifestPtr = std::unique_ptr<nmtp_manifest, ManifestDeleter>;
using ModelPtr = std::unique_ptr<nmtp_model, ModelDeleter>;

[[noreturn]] void die(nmtp_status status) {
    std::fprintf(stderr, "nmtprune: %s: %s\n", nmtp_status_name(status),
                 nmtp_last_error());
    std::exit(1);
}

void check(nmtp_status status) {
    if (status != NMTP_OK) die(status);
}

ManifestPtr load_manifest(const std::string& path,
                          const std::vector<std::string>& overrides) {
    nmtp_manifest* raw = nullptr;
    if (path.empty()) {
        check(nmtp_manifest_create(&raw));
    } else {
        check(nmtp_manifest_open(path.c_str(), &raw));
    }
    ManifestPtr manifest(raw);
    for (const std::string& kv : overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "nmtprune: --set expects key=value, got '%s'\n",
                         kv.c_str());
            std::exit(1);
        }
        check(nmtp_manifest_set(manifest.get(), kv.substr(0, eq).c_str(),
                                kv.substr(eq + 1).c_str()));
    }
    return manifest;
}

std::string output_dir(const nmtp_manifest* manifest, const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    char buf[1024];
    if (nmtp_manifest_get(manifest, "out.dir", buf, sizeof(buf)) == NMTP_OK) {
        return buf;
    }
    return "runs/out";
}

ModelPtr load_model(const std::string& path) {
    nmtp_model* raw = nullptr;
    check(nmtp_model_load(path.c_str(), &raw));
    return ModelPtr(raw);
}

void print_mask_stats(const nmtp_model* model) {
    double total = 1.0;
    check(nmtp_model_retained_fraction(model, -1, &total));
    std::printf("retained fraction: %.6f (of %llu parameters)\n", total,
                static_cast<unsigned long long>(nmtp_model_param_count(model)));
    const int classes = nmtp_model_class_count(model);
    for (int c = 0; c < classes; ++c) {
        char name[64];
        double fraction = 1.0;
        check(nmtp_model_class_name(model, c, name, sizeof(name)));
        check(nmtp_model_retained_fraction(model, c, &fraction));
        std::printf("  %-20s retained %.6f\n", name, fraction);
    }
}

void print_eval(const char* split, const nmtp_eval_report& report) {
    std::printf("%s: perplexity %.4f, BLEU %.4f (%llu tokens, %llu sentences)\n",
                split, report.perplexity, report.bleu,
                static_cast<unsigned long long>(report.tokens),
                static_cast<unsigned long long>(report.sentences));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Train, prune, retrain and analyze small LSTM translation models"};
    app.require_subcommand(1);

    std::string manifest_path, checkpoint_path, out_path, scheme = "class-blind";
    std::string split = "test", bitmap_source = "percentile", sparse_path;
    std::vector<std::string> overrides;
    double x = 0.8;

    auto add_manifest = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--manifest", manifest_path,
                                    "experiment manifest file");
        if (required) opt->required();
        cmd->add_option("--set", overrides, "override manifest keys (key=value)");
    };

    CLI::App* train = app.add_subcommand("train", "train a baseline model");
    add_manifest(train, true);
    train->add_option("--out", out_path, "output directory");

    CLI::App* prune = app.add_subcommand("prune", "apply a magnitude-pruning scheme");
    prune->add_option("--checkpoint", checkpoint_path, "input checkpoint")->required();
    prune->add_option("--scheme", scheme,
                      "class-blind, class-uniform or class-distribution");
    prune->add_option("--x", x, "fraction of parameters to prune")->required();
    prune->add_option("--out", out_path, "output checkpoint path")->required();
    prune->add_option("--sparse", sparse_path, "also write a sparse checkpoint here");

    CLI::App* retrain = app.add_subcommand("retrain", "retrain under the mask");
    add_manifest(retrain, true);
    retrain->add_option("--checkpoint", checkpoint_path, "pruned checkpoint")
        ->required();
    retrain->add_option("--out", out_path, "output directory");

    CLI::App* scratch = app.add_subcommand(
        "sparse-scratch", "train a fresh model under an existing mask");
    add_manifest(scratch, true);
    scratch->add_option("--checkpoint", checkpoint_path, "mask source checkpoint")
        ->required();
    scratch->add_option("--out", out_path, "output directory");

    CLI::App* eval = app.add_subcommand("eval", "perplexity and BLEU");
    add_manifest(eval, true);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint")->required();
    eval->add_option("--split", split, "train, valid or test");

    CLI::App* analyze = app.add_subcommand("analyze", "redundancy analyses");
    add_manifest(analyze, true);
    analyze->add_option("--checkpoint", checkpoint_path, "checkpoint")->required();
    analyze->add_option("--scheme", scheme, "pruning scheme for the breakdown");
    analyze->add_option("--x", x, "analysis fraction");
    analyze->add_option("--bitmap-source", bitmap_source, "percentile or mask");
    analyze->add_option("--out", out_path, "output directory");

    CLI::App* repro = app.add_subcommand(
        "repro", "full pipeline: train, sweep, prune, retrain, analyze");
    add_manifest(repro, true);
    repro->add_option("--out", out_path, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (train->parsed()) {
        ManifestPtr manifest = load_manifest(manifest_path, overrides);
        const std::string dir = output_dir(manifest.get(), out_path);
        check(nmtp_train(manifest.get(), dir.c_str()));
        std::printf("wrote %s/baseline.ckpt and %s/train_log.csv\n", dir.c_str(),
                    dir.c_str());
    } else if (prune->parsed()) {
        ModelPtr model = load_model(checkpoint_path);
        nmtp_prune_report report{};
        check(nmtp_model_prune(model.get(), scheme.c_str(), x, &report));
        std::printf("scheme %s, requested %.4f, pruned %.6f", scheme.c_str(),
                    report.requested_fraction, report.pruned_fraction);
        if (scheme == "class-distribution") {
            std::printf(", lambda %.6g", report.lambda);
        }
        std::printf("\n");
        print_mask_stats(model.get());
        check(nmtp_model_save_dense(model.get(), out_path.c_str()));
        std::printf("wrote %s\n", out_path.c_str());
        if (!sparse_path.empty()) {
            nmtp_sparse_report sparse{};
            check(nmtp_model_save_sparse(model.get(), sparse_path.c_str(), &sparse));
            std::printf("wrote %s (%llu bytes vs %llu dense, reduction %.1f%%)\n",
                        sparse_path.c_str(),
                        static_cast<unsigned long long>(sparse.sparse_bytes),
                        static_cast<unsigned long long>(sparse.dense_bytes),
                        100.0 * sparse.reduction);
        }
    } else if (retrain->parsed()) {
        ManifestPtr manifest = load_manifest(manifest_path, overrides);
        ModelPtr model = load_model(checkpoint_path);
        const std::string dir = output_dir(manifest.get(), out_path);
        const std::string log = dir + "/retrain_log.csv";
        check(nmtp_retrain(manifest.get(), model.get(), log.c_str()));
        const std::string out = dir + "/retrained.ckpt";
        check(nmtp_model_save_dense(model.get(), out.c_str()));
        std::printf("wrote %s and %s\n", out.c_str(), log.c_str());
    } else if (scratch->parsed()) {
        ManifestPtr manifest = load_manifest(manifest_path, overrides);
        ModelPtr source = load_model(checkpoint_path);
        const std::string dir = output_dir(manifest.get(), out_path);
        const std::string log = dir + "/sparse_scratch_log.csv";
        nmtp_model* raw = nullptr;
        check(nmtp_sparse_scratch(manifest.get(), source.get(), log.c_str(), &raw));
        ModelPtr model(raw);
        const std::string out = dir + "/sparse_scratch.ckpt";
        check(nmtp_model_save_dense(model.get(), out.c_str()));
        std::printf("wrote %s and %s\n", out.c_str(), log.c_str());
    } else if (eval->parsed()) {
        ManifestPtr manifest = load_manifest(manifest_path, overrides);
        ModelPtr model = load_model(checkpoint_path);
        nmtp_eval_report report{};
        check(nmtp_eval(manifest.get(), model.get(), split.c_str(), &report));
        print_eval(split.c_str(), report);
    } else if (analyze->parsed()) {
        ManifestPtr manifest = load_manifest(manifest_path, overrides);
        ModelPtr model = load_model(checkpoint_path);
        const std::string dir = output_dir(manifest.get(), out_path);
        check(nmtp_analyze(manifest.get(), model.get(), scheme.c_str(), x,
                           bitmap_source.c_str(), dir.c_str()));
        std::printf("wrote analysis artifacts to %s\n", dir.c_str());
    } else if (repro->parsed()) {
        ManifestPtr manifest = load_manifest(manifest_path, overrides);
        const std::string dir = output_dir(manifest.get(), out_path);
        check(nmtp_repro(manifest.get(), dir.c_str()));
        std::printf("wrote pipeline artifacts to %s\n", dir.c_str());
    }
    return 0;
}
