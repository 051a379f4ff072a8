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

#ifndef NMTPRUNE_CORE_TRAIN_HPP
#define NMTPRUNE_CORE_TRAIN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/prune.hpp"

namespace nmtprune {

enum class LrSchedule {
    constant,
    // Fixed rate for the first two epochs, then halved every half epoch.
    halve_after_two,
};

const char* schedule_name(LrSchedule s);
LrSchedule parse_schedule(const std::string& name);

enum class Phase { baseline, pruned, retrain, sparse_scratch };

const char* phase_name(Phase p);

struct TrainConfig {
    double learning_rate = 1.0;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double max_grad_norm = 5.0;
    double dropout = 0.0;
    LrSchedule schedule = LrSchedule::constant;
    std::size_t patience = 2; // evaluations without improvement; 0 disables
    std::uint64_t seed = 0;
    Phase phase = Phase::baseline;
    const PruneMask* mask = nullptr; // not owned

    void validate() const;
};

struct TrainRecord {
    double epoch = 0.0; // fractional position
    Phase phase = Phase::baseline;
    double learning_rate = 0.0;
    double train_loss = 0.0; // mean per-token loss since the last record
    double valid_loss = 0.0; // mean per-token loss, dropout off
};

struct TrainLog {
    std::vector<TrainRecord> records;
    std::size_t steps = 0;
    bool diverged = false;
    bool early_stopped = false;

    std::string to_csv() const;
    void append_csv_rows(std::string& out) const;
};

// Learning rate at a fractional epoch position under a schedule.
double scheduled_lr(LrSchedule schedule, double base_lr, double epoch_position);

// The retraining schedule: 0.5 until epoch 2, then halved every half epoch.
double retrain_lr(double epoch_position);

// One clipped SGD update. Gradients at masked positions are zeroed first,
// the global norm is computed over the remaining gradients and scaled down
// to max_norm if it exceeds it, and masked weights stay exactly 0.0.
// Non-finite gradients reject the step without touching any weight.
void sgd_step(ClassRegistry& registry, std::vector<Matrix>& gradients, double lr,
              double max_norm, const PruneMask* mask);

// Mini-batch SGD over shuffled epochs with half-epoch validation records and
// early stopping. With config.mask set this is masked retraining; with a
// freshly initialized registry it is the sparse-from-scratch mode.
TrainLog train(ClassRegistry& registry, const Corpus& train_corpus,
               const Corpus& valid_corpus, const TrainConfig& config);

// Uniform initialization in [-0.1, 0.1], deterministic per seed.
ClassRegistry init_weights(const ModelConfig& config, std::uint64_t seed);

// Mean per-token cross entropy over a corpus, dropout off.
double corpus_mean_loss(const ClassRegistry& registry, const Corpus& corpus);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_TRAIN_HPP
