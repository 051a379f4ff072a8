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

#include "core/corpus.hpp"

#include <algorithm>
#include <fstream>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace nmtprune {

const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    }
    return "?";
}

std::size_t Corpus::total_predictions() const {
    std::size_t total = 0;
    for (const auto& p : pairs) total += p.predictions();
    return total;
}

void Corpus::validate(std::size_t source_vocab, std::size_t target_vocab) const {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (p.source.empty() || p.target.size() < 2) {
            throw_invalid("corpus: empty sequence in pair " + std::to_string(i));
        }
        for (TokenId t : p.source) {
            if (t < 0 || static_cast<std::size_t>(t) >= source_vocab) {
                throw_invalid("corpus: source index " + std::to_string(t) +
                              " out of range in pair " + std::to_string(i));
            }
        }
        for (TokenId t : p.target) {
            if (t < 0 || static_cast<std::size_t>(t) >= target_vocab) {
                throw_invalid("corpus: target index " + std::to_string(t) +
                              " out of range in pair " + std::to_string(i));
            }
        }
    }
}

Vocabulary synthetic_vocab(std::size_t vocab_size) {
    if (vocab_size < 4) {
        throw_invalid("synthetic vocab: size must be at least 4, got " +
                      std::to_string(vocab_size));
    }
    std::vector<std::string> words = {"<unk>", "<s>", "</s>"};
    words.reserve(vocab_size);
    for (std::size_t i = 0; i + Vocabulary::kReserved < vocab_size; ++i) {
        words.push_back("w" + std::to_string(i));
    }
    return Vocabulary(std::move(words));
}

Corpus gen_synthetic_reversal(std::size_t vocab_size, std::size_t pairs,
                              std::size_t min_len, std::size_t max_len,
                              std::uint64_t seed, Split split) {
    if (vocab_size < 4) {
        throw_invalid("gen_synthetic: vocab_size must be at least 4");
    }
    if (min_len < 1 || min_len > max_len) {
        throw_invalid("gen_synthetic: need 1 <= min_len <= max_len, got [" +
                      std::to_string(min_len) + ", " + std::to_string(max_len) + "]");
    }
    const std::size_t alphabet = vocab_size - Vocabulary::kReserved;
    Rng rng(seed);
    Corpus corpus;
    corpus.split = split;
    corpus.pairs.reserve(pairs);
    for (std::size_t p = 0; p < pairs; ++p) {
        const std::size_t len = min_len + rng.below(max_len - min_len + 1);
        SentencePair pair;
        pair.source.reserve(len);
        for (std::size_t i = 0; i < len; ++i) {
            pair.source.push_back(static_cast<TokenId>(Vocabulary::kReserved +
                                                       rng.below(alphabet)));
        }
        pair.target.reserve(len + 2);
        pair.target.push_back(Vocabulary::kStart);
        pair.target.insert(pair.target.end(), pair.source.rbegin(), pair.source.rend());
        pair.target.push_back(Vocabulary::kEnd);
        corpus.pairs.push_back(std::move(pair));
    }
    return corpus;
}

std::vector<std::vector<std::string>> read_tokenized_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw_io("cannot open corpus file: " + path);
    }
    std::vector<std::vector<std::string>> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tokens = split_whitespace(line);
        if (tokens.empty()) {
            throw_format(path + ":" + std::to_string(lineno) + ": empty sentence");
        }
        lines.push_back(std::move(tokens));
    }
    if (lines.empty()) {
        throw_format(path + ": corpus file has no sentences");
    }
    return lines;
}

Corpus encode_corpus(const std::vector<std::vector<std::string>>& source_lines,
                     const std::vector<std::vector<std::string>>& target_lines,
                     const Vocabulary& source_vocab, const Vocabulary& target_vocab,
                     Split split) {
    if (source_lines.size() != target_lines.size()) {
        throw_format("corpus: " + std::to_string(source_lines.size()) +
                     " source lines vs " + std::to_string(target_lines.size()) +
                     " target lines");
    }
    Corpus corpus;
    corpus.split = split;
    corpus.pairs.reserve(source_lines.size());
    for (std::size_t i = 0; i < source_lines.size(); ++i) {
        SentencePair pair;
        pair.source = source_vocab.encode(source_lines[i]);
        pair.target = target_vocab.encode_target(target_lines[i]);
        corpus.pairs.push_back(std::move(pair));
    }
    return corpus;
}

std::vector<Batch> make_batches(const Corpus& corpus, std::size_t batch_size,
                                std::uint64_t seed) {
    if (batch_size < 1) {
        throw_invalid("batches: batch_size must be at least 1");
    }
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<Batch> batches;
    batches.reserve((corpus.size() + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t count = std::min(batch_size, order.size() - start);
        Batch batch;
        std::size_t max_src = 0, max_tgt = 0;
        for (std::size_t k = 0; k < count; ++k) {
            const SentencePair& p = corpus.pairs[order[start + k]];
            max_src = std::max(max_src, p.source.size());
            max_tgt = std::max(max_tgt, p.target.size());
        }
        for (std::size_t k = 0; k < count; ++k) {
            const SentencePair& p = corpus.pairs[order[start + k]];
            std::vector<TokenId> src(max_src, Vocabulary::kUnknown);
            std::copy(p.source.begin(), p.source.end(), src.begin());
            std::vector<TokenId> tgt(max_tgt, Vocabulary::kUnknown);
            std::copy(p.target.begin(), p.target.end(), tgt.begin());
            std::vector<std::uint8_t> mask(max_tgt, 0);
            for (std::size_t j = 1; j < p.target.size(); ++j) mask[j] = 1;
            batch.real_target_tokens += p.predictions();
            batch.source.push_back(std::move(src));
            batch.target.push_back(std::move(tgt));
            batch.target_loss_mask.push_back(std::move(mask));
            batch.source_len.push_back(p.source.size());
            batch.target_len.push_back(p.target.size());
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

} // namespace nmtprune
