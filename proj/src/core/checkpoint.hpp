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

#ifndef NMTPRUNE_CORE_CHECKPOINT_HPP
#define NMTPRUNE_CORE_CHECKPOINT_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "core/prune.hpp"
#include "core/train.hpp"
#include "core/vocab.hpp"

namespace nmtprune {

// Serialized model state. Both on-disk formats are little-endian and
// documented in docs/checkpoint_format.md; round trips are bit-exact.
struct Checkpoint {
    ClassRegistry registry;
    Vocabulary source_vocab;
    Vocabulary target_vocab;
    std::optional<PruneMask> mask;
    std::uint64_t seed = 0;
    Phase phase = Phase::baseline;

    const ModelConfig& config() const { return registry.config(); }
};

enum class CheckpointFormat : std::uint8_t { dense = 0, sparse = 1 };

// In-memory serialization; include_mask only affects the dense format
// (sparse cannot exist without its mask).
std::string serialize_checkpoint(const Checkpoint& ckpt, CheckpointFormat format,
                                 bool include_mask = true);

Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_dense(const Checkpoint& ckpt, const std::string& path);

struct SparseReport {
    std::uint64_t sparse_bytes = 0;
    // Size of the dense serialization of the same model without mask
    // payload: what a plain dense checkpoint of this model would take.
    std::uint64_t dense_bytes = 0;
    double reduction = 0.0; // 1 - sparse/dense; negative when sparse is larger
};

// Bit-packed mask plus packed retained values per class. Requires a mask.
SparseReport save_sparse(const Checkpoint& ckpt, const std::string& path);

// Auto-detects the format from the header.
Checkpoint load_checkpoint(const std::string& path);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_CHECKPOINT_HPP
