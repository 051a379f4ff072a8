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

#include "core/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core/errors.hpp"

namespace nmtprune {

const std::array<const char*, 4> kGateNames = {"i", "f", "o", "h_hat"};
const std::array<const char*, 2> kInputNames = {"feed_forward", "recurrent"};

std::vector<BreakdownRow> class_breakdown(const ClassRegistry& registry,
                                          const Corpus& corpus, PruneScheme scheme,
                                          double x) {
    const double baseline = perplexity(registry, corpus);
    const PruneMask global_mask = compute_mask(registry, scheme, x);

    std::vector<BreakdownRow> rows;
    rows.reserve(registry.class_count());
    for (std::size_t c = 0; c < registry.class_count(); ++c) {
        BreakdownRow row;
        row.id = registry.entries()[c].id;
        row.scheme = scheme;
        row.x = x;

        PruneMask restricted = PruneMask::all_ones(registry);
        restricted.entries[c].mask = global_mask.entries[c].mask;

        const MaskMatrix& class_mask = global_mask.entries[c].mask;
        const Matrix& weights = registry.entries()[c].weights;
        std::size_t pruned = 0;
        double max_deleted = 0.0;
        for (std::size_t i = 0; i < class_mask.bits.size(); ++i) {
            if (class_mask.bits[i] == 0) {
                ++pruned;
                max_deleted = std::max(max_deleted, std::abs(weights.values[i]));
            }
        }
        row.class_fraction_pruned =
            class_mask.size() == 0
                ? 0.0
                : static_cast<double>(pruned) / static_cast<double>(class_mask.size());
        row.max_deleted_magnitude = max_deleted;

        if (pruned == 0) {
            // No restriction; reproduce the baseline bit-exactly.
            row.perplexity = baseline;
        } else {
            ClassRegistry copy = registry;
            apply_mask(copy, restricted);
            row.perplexity = perplexity(copy, corpus);
        }
        row.perplexity_delta = row.perplexity - baseline;
        rows.push_back(row);
    }
    return rows;
}

std::string breakdown_csv(const std::vector<BreakdownRow>& rows) {
    std::string out =
        "class,scheme,x,class_fraction_pruned,ppl,ppl_delta,max_deleted_magnitude\n";
    char buf[256];
    for (const BreakdownRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.4f,%.6f,%.6f,%.6f,%.8g\n",
                      r.id.name().c_str(), scheme_name(r.scheme), r.x,
                      r.class_fraction_pruned, r.perplexity, r.perplexity_delta,
                      r.max_deleted_magnitude);
        out += buf;
    }
    return out;
}

std::string scatter_csv(const std::vector<BreakdownRow>& rows) {
    std::string out = "class,max_deleted_magnitude,ppl_delta\n";
    char buf[160];
    for (const BreakdownRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.8g,%.6f\n", r.id.name().c_str(),
                      r.max_deleted_magnitude, r.perplexity_delta);
        out += buf;
    }
    return out;
}

MaskMatrix redundancy_bitmap(const Matrix& weights, double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw_invalid("bitmap: fraction must lie in [0, 1], got " + std::to_string(x));
    }
    MaskMatrix bitmap(weights.rows, weights.cols, 1);
    const std::size_t black =
        static_cast<std::size_t>(std::floor(x * static_cast<double>(weights.size())));
    if (black == 0) return bitmap;
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(weights.size());
    for (std::size_t i = 0; i < weights.values.size(); ++i) {
        order.emplace_back(std::abs(weights.values[i]), i);
    }
    std::sort(order.begin(), order.end());
    for (std::size_t k = 0; k < black; ++k) bitmap.bits[order[k].second] = 0;
    return bitmap;
}

std::string to_pgm(const MaskMatrix& bitmap) {
    std::string out = "P5\n" + std::to_string(bitmap.cols) + " " +
                      std::to_string(bitmap.rows) + "\n255\n";
    out.reserve(out.size() + bitmap.size());
    for (std::uint8_t b : bitmap.bits) {
        out.push_back(b ? static_cast<char>(255) : '\0');
    }
    return out;
}

std::array<double, 8> subgroup_retention(const MaskMatrix& layer_mask) {
    if (layer_mask.rows == 0 || layer_mask.rows % 4 != 0 ||
        layer_mask.cols * 2 != layer_mask.rows) {
        throw_invalid("subgroup_retention: mask is " +
                      shape_of(layer_mask.rows, layer_mask.cols) +
                      ", expected 4n x 2n");
    }
    const std::size_t n = layer_mask.rows / 4;
    std::array<double, 8> fractions{};
    for (std::size_t gate = 0; gate < 4; ++gate) {
        for (std::size_t input = 0; input < 2; ++input) {
            std::size_t retained = 0;
            for (std::size_t r = gate * n; r < (gate + 1) * n; ++r) {
                for (std::size_t c = input * n; c < (input + 1) * n; ++c) {
                    retained += layer_mask.at(r, c);
                }
            }
            fractions[gate * 2 + input] =
                static_cast<double>(retained) / static_cast<double>(n * n);
        }
    }
    return fractions;
}

std::vector<std::size_t> pruned_out_words(const MaskMatrix& embedding_mask) {
    std::vector<std::size_t> columns;
    for (std::size_t c = 0; c < embedding_mask.cols; ++c) {
        bool all_zero = true;
        for (std::size_t r = 0; r < embedding_mask.rows && all_zero; ++r) {
            all_zero = embedding_mask.at(r, c) == 0;
        }
        if (all_zero) columns.push_back(c);
    }
    return columns;
}

} // namespace nmtprune
