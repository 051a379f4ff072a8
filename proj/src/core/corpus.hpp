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

#ifndef NMTPRUNE_CORE_CORPUS_HPP
#define NMTPRUNE_CORE_CORPUS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/vocab.hpp"

namespace nmtprune {

enum class Split { train, valid, test };

const char* split_name(Split s);

// One encoded pair. Target carries the start/end wrapping, so the model
// predicts target[1..] from target[..len-1]; predictions include the end
// symbol, and `target.size() - 1` is the pair's real token count.
struct SentencePair {
    std::vector<TokenId> source;         // no wrapping
    std::vector<TokenId> target;         // <s> ... </s>
    std::size_t predictions() const { return target.size() - 1; }
    // The raw target tokens, without the wrapping symbols.
    std::span<const TokenId> target_raw() const {
        return std::span<const TokenId>(target).subspan(1, target.size() - 2);
    }
};

struct Corpus {
    Split split = Split::train;
    std::vector<SentencePair> pairs;

    std::size_t size() const { return pairs.size(); }
    std::size_t total_predictions() const;
    // Every index must fall inside the given vocabulary sizes.
    void validate(std::size_t source_vocab, std::size_t target_vocab) const;
};

// Deterministic synthetic vocabulary: reserved symbols plus w0, w1, ...
Vocabulary synthetic_vocab(std::size_t vocab_size);

// Sequence-reversal task: source is a uniform random token sequence drawn
// from the non-reserved part of synthetic_vocab(vocab_size); target is the
// source reversed. Deterministic for a fixed seed.
Corpus gen_synthetic_reversal(std::size_t vocab_size, std::size_t pairs,
                              std::size_t min_len, std::size_t max_len,
                              std::uint64_t seed, Split split = Split::train);

// Plain-text parallel corpus: one sentence per line, aligned line numbers,
// whitespace tokenization. Empty lines are rejected with their line number.
std::vector<std::vector<std::string>> read_tokenized_lines(const std::string& path);

Corpus encode_corpus(const std::vector<std::vector<std::string>>& source_lines,
                     const std::vector<std::vector<std::string>>& target_lines,
                     const Vocabulary& source_vocab, const Vocabulary& target_vocab,
                     Split split);

// Mini-batch of padded index rows. Padded positions never contribute loss:
// target_loss_mask is 0 at position 0 (the start symbol is not predicted)
// and at every padding slot.
struct Batch {
    std::vector<std::vector<TokenId>> source;  // padded with kUnknown
    std::vector<std::vector<TokenId>> target;  // wrapped, padded with kUnknown
    std::vector<std::vector<std::uint8_t>> target_loss_mask;
    std::vector<std::size_t> source_len;
    std::vector<std::size_t> target_len;       // wrapped length
    std::size_t real_target_tokens = 0;

    std::size_t size() const { return source.size(); }
};

// Deterministically shuffled (per seed) padded batches covering the corpus.
std::vector<Batch> make_batches(const Corpus& corpus, std::size_t batch_size,
                                std::uint64_t seed);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_CORPUS_HPP
