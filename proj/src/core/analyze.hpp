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

#ifndef NMTPRUNE_CORE_ANALYZE_HPP
#define NMTPRUNE_CORE_ANALYZE_HPP

#include <array>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/eval.hpp"
#include "core/prune.hpp"

namespace nmtprune {

// Effect of pruning one class alone under the global-scheme mask at x.
struct BreakdownRow {
    WeightClassId id;
    PruneScheme scheme;
    double x = 0.0;
    double class_fraction_pruned = 0.0;
    double perplexity = 0.0;
    double perplexity_delta = 0.0;
    double max_deleted_magnitude = 0.0;
};

// For each class: restrict the scheme's global mask at x to that class,
// apply it to a copy, and measure perplexity. The input registry is left
// untouched; a zero-class restriction reproduces the baseline bit-exactly.
std::vector<BreakdownRow> class_breakdown(const ClassRegistry& registry,
                                          const Corpus& corpus, PruneScheme scheme,
                                          double x);

std::string breakdown_csv(const std::vector<BreakdownRow>& rows);

// Projection of breakdown rows onto (largest deleted magnitude, ppl delta).
std::string scatter_csv(const std::vector<BreakdownRow>& rows);

// One pixel per weight: black (0) iff |w| lies in the bottom x fraction of
// this matrix's magnitudes, ties resolved in row-major order; exactly
// floor(x * size) pixels are black.
MaskMatrix redundancy_bitmap(const Matrix& weights, double x);

// P5 binary PGM, 0 = black = pruned/small, 255 = white = retained.
std::string to_pgm(const MaskMatrix& bitmap);

// Retained fraction per LSTM subgroup of a 4n x 2n layer mask. Row blocks
// are the gates (i, f, o, h_hat); column blocks are feed-forward vs
// recurrent input. Index order: gate-major, feed-forward first.
std::array<double, 8> subgroup_retention(const MaskMatrix& layer_mask);

extern const std::array<const char*, 4> kGateNames;     // i, f, o, h_hat
extern const std::array<const char*, 2> kInputNames;    // feed_forward, recurrent

// Fully-zero columns of an embedding mask: words whose every parameter was
// pruned away.
std::vector<std::size_t> pruned_out_words(const MaskMatrix& embedding_mask);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_ANALYZE_HPP
