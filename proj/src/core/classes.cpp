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

#include "core/classes.hpp"

#include "core/errors.hpp"

namespace nmtprune {

void ModelConfig::validate() const {
    if (layers < 1) throw_invalid("config: layers must be at least 1");
    if (hidden < 1) throw_invalid("config: hidden size must be at least 1");
    if (source_vocab < 4 || target_vocab < 4) {
        throw_invalid("config: vocabulary sizes must be at least 4");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw_invalid("config: dropout must lie in [0, 1)");
    }
}

std::string WeightClassId::name() const {
    switch (kind) {
    case WeightClassKind::source_embedding: return "source_embedding";
    case WeightClassKind::target_embedding: return "target_embedding";
    case WeightClassKind::source_layer: return "source_layer_" + std::to_string(layer);
    case WeightClassKind::target_layer: return "target_layer_" + std::to_string(layer);
    case WeightClassKind::attention: return "attention";
    case WeightClassKind::softmax: return "softmax";
    }
    return "?";
}

WeightClassId parse_class_name(const std::string& name) {
    if (name == "source_embedding") return {WeightClassKind::source_embedding, 0};
    if (name == "target_embedding") return {WeightClassKind::target_embedding, 0};
    if (name == "attention") return {WeightClassKind::attention, 0};
    if (name == "softmax") return {WeightClassKind::softmax, 0};
    for (const char* prefix : {"source_layer_", "target_layer_"}) {
        const std::string p(prefix);
        if (name.rfind(p, 0) == 0) {
            const std::size_t layer = std::stoul(name.substr(p.size()));
            return {p[0] == 's' ? WeightClassKind::source_layer
                                : WeightClassKind::target_layer,
                    layer};
        }
    }
    throw_invalid("unknown weight class: " + name);
}

Matrix class_shape(const ModelConfig& config, const WeightClassId& id) {
    const std::size_t n = config.hidden;
    switch (id.kind) {
    case WeightClassKind::source_embedding: return Matrix(n, config.source_vocab);
    case WeightClassKind::target_embedding: return Matrix(n, config.target_vocab);
    case WeightClassKind::source_layer:
    case WeightClassKind::target_layer: return Matrix(4 * n, 2 * n);
    case WeightClassKind::attention: return Matrix(n, 2 * n);
    case WeightClassKind::softmax: return Matrix(config.target_vocab, n);
    }
    throw_invalid("class_shape: unknown kind");
}

ClassRegistry::ClassRegistry(const ModelConfig& config) : config_(config) {
    config.validate();
    auto push = [&](WeightClassId id) {
        entries_.push_back({id, class_shape(config_, id)});
    };
    push({WeightClassKind::source_embedding, 0});
    push({WeightClassKind::target_embedding, 0});
    for (std::size_t l = 1; l <= config.layers; ++l) {
        push({WeightClassKind::source_layer, l});
    }
    for (std::size_t l = 1; l <= config.layers; ++l) {
        push({WeightClassKind::target_layer, l});
    }
    push({WeightClassKind::attention, 0});
    push({WeightClassKind::softmax, 0});
}

ClassRegistry ClassRegistry::custom(std::vector<Entry> entries) {
    if (entries.empty()) throw_invalid("registry: no classes");
    ClassRegistry registry;
    registry.entries_ = std::move(entries);
    for (std::size_t i = 0; i < registry.entries_.size(); ++i) {
        const auto& e = registry.entries_[i];
        if (e.weights.size() == 0) {
            throw_invalid("registry: class " + e.id.name() + " is empty");
        }
        for (std::size_t j = i + 1; j < registry.entries_.size(); ++j) {
            if (registry.entries_[j].id == e.id) {
                throw_invalid("registry: duplicate class " + e.id.name());
            }
        }
    }
    return registry;
}

std::size_t ClassRegistry::index_of(const WeightClassId& id) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].id == id) return i;
    }
    throw_invalid("registry: no class " + id.name());
}

const Matrix& ClassRegistry::weights(const WeightClassId& id) const {
    return entries_[index_of(id)].weights;
}

Matrix& ClassRegistry::weights(const WeightClassId& id) {
    return entries_[index_of(id)].weights;
}

std::size_t ClassRegistry::param_count() const {
    std::size_t total = 0;
    for (const auto& e : entries_) total += e.weights.size();
    return total;
}

std::size_t param_count(const ModelConfig& config) {
    config.validate();
    const std::size_t n = config.hidden;
    return 2 * config.layers * 8 * n * n + 2 * n * n + n * config.source_vocab +
           2 * n * config.target_vocab;
}

} // namespace nmtprune
