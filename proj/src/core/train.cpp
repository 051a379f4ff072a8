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

#include "core/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "core/errors.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"

namespace nmtprune {

const char* schedule_name(LrSchedule s) {
    switch (s) {
    case LrSchedule::constant: return "constant";
    case LrSchedule::halve_after_two: return "halve-after-two";
    }
    return "?";
}

LrSchedule parse_schedule(const std::string& name) {
    if (name == "constant") return LrSchedule::constant;
    if (name == "halve-after-two") return LrSchedule::halve_after_two;
    throw_invalid("unknown learning-rate schedule: " + name);
}

const char* phase_name(Phase p) {
    switch (p) {
    case Phase::baseline: return "baseline";
    case Phase::pruned: return "pruned";
    case Phase::retrain: return "retrain";
    case Phase::sparse_scratch: return "sparse-scratch";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw_invalid("train: learning rate must be positive");
    if (!(max_grad_norm > 0.0)) throw_invalid("train: max gradient norm must be positive");
    if (batch_size < 1) throw_invalid("train: batch size must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw_invalid("train: dropout must lie in [0, 1)");
}

double scheduled_lr(LrSchedule schedule, double base_lr, double epoch_position) {
    if (epoch_position < 0.0) throw_invalid("schedule: negative epoch position");
    if (schedule == LrSchedule::constant || epoch_position < 2.0) return base_lr;
    const double halvings = std::floor((epoch_position - 2.0) / 0.5) + 1.0;
    return base_lr * std::pow(2.0, -halvings);
}

double retrain_lr(double epoch_position) {
    return scheduled_lr(LrSchedule::halve_after_two, 0.5, epoch_position);
}

void sgd_step(ClassRegistry& registry, std::vector<Matrix>& gradients, double lr,
              double max_norm, const PruneMask* mask) {
    if (gradients.size() != registry.class_count()) {
        throw_invalid("sgd_step: expected " + std::to_string(registry.class_count()) +
                      " gradient matrices, got " + std::to_string(gradients.size()));
    }
    for (std::size_t c = 0; c < gradients.size(); ++c) {
        if (!gradients[c].same_shape(registry.entries()[c].weights)) {
            throw_invalid("sgd_step: gradient shape mismatch for class " +
                          registry.entries()[c].id.name());
        }
    }
    if (mask != nullptr) {
        if (!mask->shapes_match(registry)) {
            throw_invalid("sgd_step: mask shapes do not match the registry");
        }
        for (std::size_t c = 0; c < gradients.size(); ++c) {
            const MaskMatrix& m = mask->entries[c].mask;
            for (std::size_t i = 0; i < m.bits.size(); ++i) {
                if (m.bits[i] == 0) gradients[c].values[i] = 0.0;
            }
        }
    }

    double norm_sq = 0.0;
    for (const Matrix& g : gradients) {
        for (double v : g.values) norm_sq += v * v;
    }
    if (!std::isfinite(norm_sq)) {
        throw_numeric("sgd_step: non-finite gradients, step rejected");
    }
    const double norm = std::sqrt(norm_sq);
    const double scale = norm > max_norm ? max_norm / norm : 1.0;

    for (std::size_t c = 0; c < gradients.size(); ++c) {
        Matrix& w = registry.entries()[c].weights;
        const Matrix& g = gradients[c];
        const MaskMatrix* m = mask != nullptr ? &mask->entries[c].mask : nullptr;
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            if (m != nullptr && m->bits[i] == 0) {
                w.values[i] = 0.0;
            } else {
                w.values[i] -= lr * scale * g.values[i];
            }
        }
    }
}

ClassRegistry init_weights(const ModelConfig& config, std::uint64_t seed) {
    ClassRegistry registry(config);
    Rng rng(seed);
    for (auto& e : registry.entries()) {
        for (double& v : e.weights.values) v = rng.uniform(-0.1, 0.1);
    }
    return registry;
}

double corpus_mean_loss(const ClassRegistry& registry, const Corpus& corpus) {
    if (corpus.size() == 0) throw_invalid("evaluate: empty corpus");
    double total = 0.0;
    std::size_t tokens = 0;
    for (const SentencePair& pair : corpus.pairs) {
        Tape tape;
        ModelGraph graph(tape, registry);
        ForwardLoss fl = forward_loss(graph, pair.source, pair.target);
        total += fl.loss;
        tokens += fl.tokens;
    }
    return total / static_cast<double>(tokens);
}

std::string TrainLog::to_csv() const {
    std::string out = "epoch,phase,lr,train_loss,valid_loss\n";
    append_csv_rows(out);
    return out;
}

void TrainLog::append_csv_rows(std::string& out) const {
    char buf[160];
    for (const TrainRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%.4f,%s,%.8g,%.8g,%.8g\n", r.epoch,
                      phase_name(r.phase), r.learning_rate, r.train_loss,
                      r.valid_loss);
        out += buf;
    }
}

TrainLog train(ClassRegistry& registry, const Corpus& train_corpus,
               const Corpus& valid_corpus, const TrainConfig& config) {
    config.validate();
    const ModelConfig& mc = registry.config();
    train_corpus.validate(mc.source_vocab, mc.target_vocab);
    valid_corpus.validate(mc.source_vocab, mc.target_vocab);
    if (config.mask != nullptr && !config.mask->shapes_match(registry)) {
        throw_invalid("train: mask shapes do not match the registry");
    }

    TrainLog log;
    if (config.epochs == 0) return log;

    Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const Dropout dropout{config.dropout,
                          config.dropout > 0.0 ? &dropout_rng : nullptr};

    double best_valid = std::numeric_limits<double>::infinity();
    std::size_t evals_since_best = 0;

    double window_loss = 0.0;
    std::size_t window_tokens = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const std::uint64_t epoch_seed = config.seed + 1000003ULL * (epoch + 1);
        std::vector<Batch> batches =
            make_batches(train_corpus, config.batch_size, epoch_seed);
        const std::size_t num_batches = batches.size();
        const std::size_t mid = num_batches >= 2 ? num_batches / 2 : num_batches;

        for (std::size_t b = 0; b < num_batches; ++b) {
            const Batch& batch = batches[b];
            const double position =
                static_cast<double>(epoch) +
                static_cast<double>(b) / static_cast<double>(num_batches);
            const double lr =
                scheduled_lr(config.schedule, config.learning_rate, position);

            Tape tape;
            ModelGraph graph(tape, registry);

            std::vector<Var> losses;
            losses.reserve(batch.size());
            std::size_t batch_tokens = 0;
            for (std::size_t s = 0; s < batch.size(); ++s) {
                std::span<const TokenId> src(batch.source[s].data(),
                                             batch.source_len[s]);
                std::span<const TokenId> tgt(batch.target[s].data(),
                                             batch.target_len[s]);
                ForwardLoss fl = forward_loss(graph, src, tgt, dropout);
                losses.push_back(fl.loss_var);
                batch_tokens += fl.tokens;
            }
            Var total = tape.sum_scalars(losses);
            const double batch_loss = tape.scalar(total);
            if (!std::isfinite(batch_loss)) {
                log.diverged = true;
                return log;
            }
            window_loss += batch_loss;
            window_tokens += batch_tokens;

            // Per-token normalization of the batch objective.
            Var objective =
                tape.scale(total, 1.0 / static_cast<double>(batch_tokens));
            tape.backward(objective);

            std::vector<Matrix> gradients;
            gradients.reserve(registry.class_count());
            for (Var leaf : graph.class_leaves) {
                gradients.push_back(tape.grad(leaf));
            }
            try {
                sgd_step(registry, gradients, lr, config.max_grad_norm, config.mask);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::numeric) {
                    log.diverged = true;
                    return log;
                }
                throw;
            }
            ++log.steps;

            const bool at_mid = num_batches >= 2 && b + 1 == mid;
            const bool at_end = b + 1 == num_batches;
            if (!at_mid && !at_end) continue;

            TrainRecord record;
            record.epoch = static_cast<double>(epoch) +
                           (at_end ? 1.0
                                   : static_cast<double>(b + 1) /
                                         static_cast<double>(num_batches));
            record.phase = config.phase;
            record.learning_rate = lr;
            record.train_loss =
                window_tokens == 0
                    ? 0.0
                    : window_loss / static_cast<double>(window_tokens);
            record.valid_loss = corpus_mean_loss(registry, valid_corpus);
            log.records.push_back(record);
            window_loss = 0.0;
            window_tokens = 0;

            if (!std::isfinite(record.valid_loss)) {
                log.diverged = true;
                return log;
            }
            if (record.valid_loss < best_valid - 1e-12) {
                best_valid = record.valid_loss;
                evals_since_best = 0;
            } else {
                ++evals_since_best;
                if (config.patience > 0 && evals_since_best >= config.patience) {
                    log.early_stopped = true;
                    return log;
                }
            }
        }
    }
    return log;
}

} // namespace nmtprune
