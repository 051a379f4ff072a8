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

#include "core/prune.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace nmtprune {

std::size_t MaskMatrix::retained() const {
    std::size_t count = 0;
    for (std::uint8_t b : bits) count += b;
    return count;
}

PruneMask PruneMask::all_ones(const ClassRegistry& registry) {
    PruneMask mask;
    mask.entries.reserve(registry.class_count());
    for (const auto& e : registry.entries()) {
        mask.entries.push_back({e.id, MaskMatrix(e.weights.rows, e.weights.cols, 1)});
    }
    return mask;
}

std::size_t PruneMask::total() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.mask.size();
    return n;
}

std::size_t PruneMask::retained() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.mask.retained();
    return n;
}

const MaskMatrix& PruneMask::mask_for(const WeightClassId& id) const {
    for (const auto& e : entries) {
        if (e.id == id) return e.mask;
    }
    throw_invalid("mask: no class " + id.name());
}

bool PruneMask::shapes_match(const ClassRegistry& registry) const {
    if (entries.size() != registry.class_count()) return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& re = registry.entries()[i];
        const auto& me = entries[i];
        if (!(me.id == re.id) || me.mask.rows != re.weights.rows ||
            me.mask.cols != re.weights.cols) {
            return false;
        }
    }
    return true;
}

const char* scheme_name(PruneScheme s) {
    switch (s) {
    case PruneScheme::class_blind: return "class-blind";
    case PruneScheme::class_uniform: return "class-uniform";
    case PruneScheme::class_distribution: return "class-distribution";
    }
    return "?";
}

PruneScheme parse_scheme(const std::string& name) {
    if (name == "class-blind") return PruneScheme::class_blind;
    if (name == "class-uniform") return PruneScheme::class_uniform;
    if (name == "class-distribution") return PruneScheme::class_distribution;
    throw_invalid("unknown pruning scheme: " + name +
                  " (expected class-blind, class-uniform or class-distribution)");
}

static void check_fraction(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw_invalid("prune: fraction must lie in [0, 1], got " + std::to_string(x));
    }
}

PruneMask prune_class_blind(const ClassRegistry& registry, double x) {
    check_fraction(x);
    PruneMask mask = PruneMask::all_ones(registry);
    const std::size_t total = mask.total();
    const std::size_t prune_count =
        static_cast<std::size_t>(std::floor(x * static_cast<double>(total)));
    if (prune_count == 0) return mask;

    // (|w|, global position); global position is class order then row-major,
    // which makes threshold ties deterministic.
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(total);
    std::size_t base = 0;
    for (const auto& e : registry.entries()) {
        for (std::size_t i = 0; i < e.weights.values.size(); ++i) {
            order.emplace_back(std::abs(e.weights.values[i]), base + i);
        }
        base += e.weights.values.size();
    }
    std::sort(order.begin(), order.end());

    std::vector<std::uint8_t> pruned(total, 0);
    for (std::size_t k = 0; k < prune_count; ++k) pruned[order[k].second] = 1;

    base = 0;
    for (auto& e : mask.entries) {
        for (std::size_t i = 0; i < e.mask.bits.size(); ++i) {
            if (pruned[base + i]) e.mask.bits[i] = 0;
        }
        base += e.mask.bits.size();
    }
    return mask;
}

PruneMask prune_class_uniform(const ClassRegistry& registry, double x) {
    check_fraction(x);
    PruneMask mask = PruneMask::all_ones(registry);
    for (std::size_t c = 0; c < registry.class_count(); ++c) {
        const Matrix& w = registry.entries()[c].weights;
        const std::size_t prune_count =
            static_cast<std::size_t>(std::floor(x * static_cast<double>(w.size())));
        if (prune_count == 0) continue;
        std::vector<std::pair<double, std::size_t>> order;
        order.reserve(w.size());
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            order.emplace_back(std::abs(w.values[i]), i);
        }
        std::sort(order.begin(), order.end());
        for (std::size_t k = 0; k < prune_count; ++k) {
            mask.entries[c].mask.bits[order[k].second] = 0;
        }
    }
    return mask;
}

DistributionResult prune_class_distribution(const ClassRegistry& registry, double x) {
    if (!(x >= 0.0 && x < 1.0)) {
        throw_invalid("class-distribution: fraction must lie in [0, 1), got " +
                      std::to_string(x));
    }
    const std::size_t total = registry.param_count();
    if (total == 0) throw_invalid("class-distribution: empty registry");

    // Per-class population standard deviation about the class mean.
    std::vector<double> sigma(registry.class_count(), 0.0);
    double max_ratio = 0.0;
    for (std::size_t c = 0; c < registry.class_count(); ++c) {
        const Matrix& w = registry.entries()[c].weights;
        double mean = 0.0;
        for (double v : w.values) mean += v;
        mean /= static_cast<double>(w.size());
        double var = 0.0;
        for (double v : w.values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(w.size());
        sigma[c] = std::sqrt(var);
        if (sigma[c] <= 0.0) {
            throw_invalid("class-distribution: class " +
                          registry.entries()[c].id.name() +
                          " has zero standard deviation");
        }
        double max_abs = 0.0;
        for (double v : w.values) max_abs = std::max(max_abs, std::abs(v));
        max_ratio = std::max(max_ratio, max_abs / sigma[c]);
    }

    auto pruned_fraction = [&](double lambda) {
        std::size_t pruned = 0;
        for (std::size_t c = 0; c < registry.class_count(); ++c) {
            const double threshold = lambda * sigma[c];
            for (double v : registry.entries()[c].weights.values) {
                if (std::abs(v) < threshold) ++pruned;
            }
        }
        return static_cast<double>(pruned) / static_cast<double>(total);
    };

    constexpr double kTolerance = 0.001;
    constexpr int kMaxIterations = 100;

    double lo = 0.0;
    // Nudged past the largest magnitude ratio so the strict threshold can
    // reach a fully-pruned registry when x approaches 1.
    double hi = max_ratio * (1.0 + 1e-9) + 1e-300;
    double lambda = 0.0;
    double achieved = pruned_fraction(lambda);
    if (std::abs(achieved - x) > kTolerance) {
        for (int iter = 0; iter < kMaxIterations; ++iter) {
            lambda = 0.5 * (lo + hi);
            achieved = pruned_fraction(lambda);
            if (std::abs(achieved - x) <= kTolerance) break;
            if (achieved < x) {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        if (std::abs(achieved - x) > kTolerance) {
            throw_numeric("class-distribution: bisection did not reach " +
                          std::to_string(x) + " within 0.001 (achieved " +
                          std::to_string(achieved) + ")");
        }
    }

    DistributionResult result;
    result.lambda = lambda;
    result.achieved_fraction = achieved;
    result.mask = PruneMask::all_ones(registry);
    for (std::size_t c = 0; c < registry.class_count(); ++c) {
        const double threshold = lambda * sigma[c];
        const Matrix& w = registry.entries()[c].weights;
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            if (std::abs(w.values[i]) < threshold) {
                result.mask.entries[c].mask.bits[i] = 0;
            }
        }
    }
    return result;
}

void apply_mask(ClassRegistry& registry, const PruneMask& mask) {
    if (!mask.shapes_match(registry)) {
        throw_invalid("apply_mask: mask shapes do not match the registry");
    }
    for (std::size_t c = 0; c < registry.class_count(); ++c) {
        Matrix& w = registry.entries()[c].weights;
        const MaskMatrix& m = mask.entries[c].mask;
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            if (m.bits[i] == 0) w.values[i] = 0.0;
        }
    }
}

MaskStats mask_stats(const PruneMask& mask) {
    MaskStats stats;
    for (const auto& e : mask.entries) {
        MaskStats::ClassStat cs;
        cs.id = e.id;
        cs.total = e.mask.size();
        cs.retained = e.mask.retained();
        cs.retained_fraction = cs.total == 0
                                   ? 1.0
                                   : static_cast<double>(cs.retained) /
                                         static_cast<double>(cs.total);
        stats.total += cs.total;
        stats.retained += cs.retained;
        stats.per_class.push_back(cs);
    }
    stats.retained_fraction =
        stats.total == 0 ? 1.0
                         : static_cast<double>(stats.retained) /
                               static_cast<double>(stats.total);
    return stats;
}

PruneMask compute_mask(const ClassRegistry& registry, PruneScheme scheme, double x,
                       double* lambda_out) {
    if (lambda_out != nullptr) *lambda_out = 0.0;
    switch (scheme) {
    case PruneScheme::class_blind: return prune_class_blind(registry, x);
    case PruneScheme::class_uniform: return prune_class_uniform(registry, x);
    case PruneScheme::class_distribution: {
        DistributionResult r = prune_class_distribution(registry, x);
        if (lambda_out != nullptr) *lambda_out = r.lambda;
        return std::move(r.mask);
    }
    }
    throw_invalid("compute_mask: unknown scheme");
}

} // namespace nmtprune
