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

#ifndef NMTPRUNE_CORE_VOCAB_HPP
#define NMTPRUNE_CORE_VOCAB_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace nmtprune {

using TokenId = std::int32_t;

// Token <-> index bijection with three reserved symbols at fixed slots.
class Vocabulary {
public:
    static constexpr TokenId kUnknown = 0;
    static constexpr TokenId kStart = 1;
    static constexpr TokenId kEnd = 2;
    static constexpr std::size_t kReserved = 3;

    Vocabulary();
    explicit Vocabulary(std::vector<std::string> words); // must start with the reserved symbols

    // Keeps the max_size - 3 most frequent tokens; frequency ties broken by
    // first occurrence order in the corpus. max_size >= 4.
    static Vocabulary build(std::span<const std::vector<std::string>> sentences,
                            std::size_t max_size);

    std::size_t size() const { return words_.size(); }
    const std::string& word(TokenId id) const;
    TokenId lookup(const std::string& token) const; // kUnknown when absent
    bool contains(const std::string& token) const;
    const std::vector<std::string>& words() const { return words_; }

    std::vector<TokenId> encode(std::span<const std::string> tokens) const;
    // Target-side encoding: wraps the sentence in start/end symbols.
    std::vector<TokenId> encode_target(std::span<const std::string> tokens) const;
    std::vector<std::string> decode(std::span<const TokenId> ids) const;

    bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> index_;
};

std::vector<std::string> split_whitespace(const std::string& line);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_VOCAB_HPP
