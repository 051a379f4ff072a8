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

#ifndef NMTPRUNE_CORE_EVAL_HPP
#define NMTPRUNE_CORE_EVAL_HPP

#include <span>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/train.hpp"

namespace nmtprune {

struct EvalReport {
    double perplexity = 1.0;
    double bleu = 0.0; // in [0, 1]
    std::size_t tokens = 0;
    std::size_t sentences = 0;

    std::string to_csv() const;
};

// exp(mean per-token cross entropy), natural base, dropout off.
double perplexity(const ClassRegistry& registry, const Corpus& corpus);

// Corpus BLEU: geometric mean of clipped 1..4-gram precisions times the
// brevity penalty; no smoothing, single reference, 0 if any precision is 0.
double bleu(std::span<const std::vector<TokenId>> hypotheses,
            std::span<const std::vector<TokenId>> references);

// Perplexity plus greedy-decode BLEU over a corpus.
EvalReport evaluate(const ClassRegistry& registry, const Corpus& corpus,
                    std::size_t decode_max_len = 64);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_EVAL_HPP
