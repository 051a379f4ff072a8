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

#include "core/vocab.hpp"

#include <algorithm>

#include "core/errors.hpp"

namespace nmtprune {

namespace {
const char* kReservedWords[3] = {"<unk>", "<s>", "</s>"};
}

Vocabulary::Vocabulary() : Vocabulary({"<unk>", "<s>", "</s>"}) {}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.size() < kReserved) {
        throw_invalid("vocabulary: fewer entries than the 3 reserved symbols");
    }
    for (std::size_t i = 0; i < kReserved; ++i) {
        if (words_[i] != kReservedWords[i]) {
            throw_invalid("vocabulary: slot " + std::to_string(i) + " must be " +
                          kReservedWords[i] + ", got " + words_[i]);
        }
    }
    index_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (!index_.emplace(words_[i], static_cast<TokenId>(i)).second) {
            throw_invalid("vocabulary: duplicate token " + words_[i]);
        }
    }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences,
                             std::size_t max_size) {
    if (max_size < kReserved + 1) {
        throw_invalid("vocabulary: size must be at least 4, got " +
                      std::to_string(max_size));
    }
    struct Entry {
        std::string token;
        std::size_t count = 0;
        std::size_t first_seen = 0;
    };
    std::vector<Entry> entries;
    std::unordered_map<std::string, std::size_t> slot;
    std::size_t position = 0;
    for (const auto& sentence : sentences) {
        for (const auto& token : sentence) {
            auto [it, inserted] = slot.emplace(token, entries.size());
            if (inserted) {
                entries.push_back({token, 1, position});
            } else {
                ++entries[it->second].count;
            }
            ++position;
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.first_seen < b.first_seen;
    });

    std::vector<std::string> words = {"<unk>", "<s>", "</s>"};
    const std::size_t keep = std::min(entries.size(), max_size - kReserved);
    words.reserve(kReserved + keep);
    for (std::size_t i = 0; i < keep; ++i) words.push_back(entries[i].token);
    return Vocabulary(std::move(words));
}

const std::string& Vocabulary::word(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
        throw_invalid("vocabulary: index " + std::to_string(id) +
                      " out of range (size " + std::to_string(words_.size()) + ")");
    }
    return words_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
    return index_.find(token) != index_.end();
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<TokenId> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lookup(t));
    return out;
}

std::vector<TokenId> Vocabulary::encode_target(
    std::span<const std::string> tokens) const {
    std::vector<TokenId> out;
    out.reserve(tokens.size() + 2);
    out.push_back(kStart);
    for (const auto& t : tokens) out.push_back(lookup(t));
    out.push_back(kEnd);
    return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (TokenId id : ids) out.push_back(word(id));
    return out;
}

std::vector<std::string> split_whitespace(const std::string& line) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) tokens.emplace_back(line.substr(start, i - start));
    }
    return tokens;
}

} // namespace nmtprune
