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

#ifndef NMTPRUNE_CORE_CLASSES_HPP
#define NMTPRUNE_CORE_CLASSES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace nmtprune {

// Architecture hyperparameters. Layer matrices carry no biases, so the
// parameter total is exactly 2L*8n^2 + 2n^2 + n*Vs + 2*n*Vt.
struct ModelConfig {
    std::size_t layers = 1;       // L
    std::size_t hidden = 1;       // n
    std::size_t source_vocab = 4; // V_s
    std::size_t target_vocab = 4; // V_t
    double dropout = 0.0;         // p, applied to non-recurrent connections

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

enum class WeightClassKind : std::uint8_t {
    source_embedding,
    target_embedding,
    source_layer,
    target_layer,
    attention,
    softmax,
};

// One of the model's disjoint parameter groups. layer is 1-based and only
// meaningful for the per-layer kinds.
struct WeightClassId {
    WeightClassKind kind;
    std::size_t layer = 0;

    std::string name() const;
    bool operator==(const WeightClassId&) const = default;
};

WeightClassId parse_class_name(const std::string& name);

// Every parameter of the model, keyed by weight class, in a fixed canonical
// order: source_embedding, target_embedding, source_layer_1..L,
// target_layer_1..L, attention, softmax. For L=4 that is 12 classes.
class ClassRegistry {
public:
    struct Entry {
        WeightClassId id;
        Matrix weights;
    };

    ClassRegistry() = default;
    explicit ClassRegistry(const ModelConfig& config); // zero-initialized

    // Registry over an explicit class list, not tied to the model layout.
    // Pruning and mask arithmetic accept these; the model forward pass and
    // checkpoints require the canonical layout.
    static ClassRegistry custom(std::vector<Entry> entries);

    const ModelConfig& config() const { return config_; }
    std::size_t class_count() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    const Matrix& weights(const WeightClassId& id) const;
    Matrix& weights(const WeightClassId& id);
    std::size_t index_of(const WeightClassId& id) const;

    std::size_t param_count() const;

private:
    ModelConfig config_;
    std::vector<Entry> entries_;
};

// Expected shape of a class's matrix under a config.
Matrix class_shape(const ModelConfig& config, const WeightClassId& id);

std::size_t param_count(const ModelConfig& config);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_CLASSES_HPP
