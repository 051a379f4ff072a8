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

#include "core/eval.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/model.hpp"

namespace nmtprune {

std::string EvalReport::to_csv() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "perplexity,bleu,tokens,sentences\n%.6f,%.6f,%zu,%zu\n",
                  perplexity, bleu, tokens, sentences);
    return buf;
}

double perplexity(const ClassRegistry& registry, const Corpus& corpus) {
    return std::exp(corpus_mean_loss(registry, corpus));
}

namespace {

// n-gram multiset keyed by the raw token bytes, length-prefixed.
using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts count_ngrams(std::span<const TokenId> tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key(reinterpret_cast<const char*>(&tokens[i]),
                        n * sizeof(TokenId));
        ++counts[key];
    }
    return counts;
}

} // namespace

double bleu(std::span<const std::vector<TokenId>> hypotheses,
            std::span<const std::vector<TokenId>> references) {
    if (hypotheses.size() != references.size()) {
        throw_invalid("bleu: " + std::to_string(hypotheses.size()) +
                      " hypotheses vs " + std::to_string(references.size()) +
                      " references");
    }
    constexpr std::size_t kMaxOrder = 4;
    std::size_t correct[kMaxOrder] = {0, 0, 0, 0};
    std::size_t total[kMaxOrder] = {0, 0, 0, 0};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;

    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const auto& hyp = hypotheses[s];
        const auto& ref = references[s];
        hyp_len += hyp.size();
        ref_len += ref.size();
        for (std::size_t n = 1; n <= kMaxOrder; ++n) {
            NgramCounts hyp_counts = count_ngrams(hyp, n);
            NgramCounts ref_counts = count_ngrams(ref, n);
            for (const auto& [gram, count] : hyp_counts) {
                total[n - 1] += count;
                auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) {
                    correct[n - 1] += std::min(count, it->second);
                }
            }
        }
    }

    double log_precision = 0.0;
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
        if (correct[n] == 0 || total[n] == 0) return 0.0;
        log_precision += std::log(static_cast<double>(correct[n]) /
                                  static_cast<double>(total[n]));
    }
    double brevity = 1.0;
    if (hyp_len < ref_len) {
        brevity = std::exp(1.0 - static_cast<double>(ref_len) /
                                     static_cast<double>(hyp_len));
    }
    return brevity * std::exp(log_precision / static_cast<double>(kMaxOrder));
}

EvalReport evaluate(const ClassRegistry& registry, const Corpus& corpus,
                    std::size_t decode_max_len) {
    if (corpus.size() == 0) throw_invalid("evaluate: empty corpus");
    EvalReport report;
    report.sentences = corpus.size();
    report.tokens = corpus.total_predictions();
    report.perplexity = perplexity(registry, corpus);

    std::vector<std::vector<TokenId>> hypotheses;
    std::vector<std::vector<TokenId>> references;
    hypotheses.reserve(corpus.size());
    references.reserve(corpus.size());
    for (const SentencePair& pair : corpus.pairs) {
        hypotheses.push_back(greedy_decode(registry, pair.source, decode_max_len));
        auto raw = pair.target_raw();
        references.emplace_back(raw.begin(), raw.end());
    }
    report.bleu = bleu(hypotheses, references);
    return report;
}

} // namespace nmtprune
