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

#ifndef NMTPRUNE_CORE_PRUNE_HPP
#define NMTPRUNE_CORE_PRUNE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "core/classes.hpp"

namespace nmtprune {

// Binary matrix marking retained (1) vs pruned (0) positions.
struct MaskMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> bits; // row-major

    MaskMatrix() = default;
    MaskMatrix(std::size_t r, std::size_t c, std::uint8_t fill = 1)
        : rows(r), cols(c), bits(r * c, fill) {}

    std::uint8_t at(std::size_t r, std::size_t c) const { return bits[r * cols + c]; }
    void set(std::size_t r, std::size_t c, std::uint8_t v) { bits[r * cols + c] = v; }
    std::size_t size() const { return rows * cols; }
    std::size_t retained() const;
};

// Per-class sparsity structure, aligned with the registry's class order.
struct PruneMask {
    struct Entry {
        WeightClassId id;
        MaskMatrix mask;
    };
    std::vector<Entry> entries;

    static PruneMask all_ones(const ClassRegistry& registry);
    std::size_t total() const;
    std::size_t retained() const;
    const MaskMatrix& mask_for(const WeightClassId& id) const;
    bool shapes_match(const ClassRegistry& registry) const;
};

enum class PruneScheme { class_blind, class_uniform, class_distribution };

const char* scheme_name(PruneScheme s);
PruneScheme parse_scheme(const std::string& name);

// Global magnitude percentile: the floor(x*N) smallest |w| over all classes
// are pruned; ties at the threshold resolve by class order then row-major
// position, earlier parameters pruned first.
PruneMask prune_class_blind(const ClassRegistry& registry, double x);

// Per-class magnitude percentile: floor(x*|c|) smallest |w| within each
// class, same deterministic tie rule within the class.
PruneMask prune_class_uniform(const ClassRegistry& registry, double x);

struct DistributionResult {
    PruneMask mask;
    double lambda = 0.0;
    double achieved_fraction = 0.0;
};

// Per-class threshold lambda * sigma_c, with sigma_c the population standard
// deviation of the class about its mean. lambda is found by bisection until
// the total pruned fraction is within +/-0.001 of x (at most 100 iterations).
DistributionResult prune_class_distribution(const ClassRegistry& registry, double x);

// w <- w * mask in place; pruned positions become exactly 0.0.
void apply_mask(ClassRegistry& registry, const PruneMask& mask);

struct MaskStats {
    struct ClassStat {
        WeightClassId id;
        std::size_t total = 0;
        std::size_t retained = 0;
        double retained_fraction = 1.0;
    };
    std::vector<ClassStat> per_class;
    std::size_t total = 0;
    std::size_t retained = 0;
    double retained_fraction = 1.0;
};

MaskStats mask_stats(const PruneMask& mask);

PruneMask compute_mask(const ClassRegistry& registry, PruneScheme scheme, double x,
                       double* lambda_out = nullptr);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_PRUNE_HPP
