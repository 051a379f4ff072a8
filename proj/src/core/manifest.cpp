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

#include "core/manifest.hpp"

#include <array>
#include <cstdlib>
#include <fstream>

#include "core/errors.hpp"

namespace nmtprune {

namespace {

constexpr std::array kKnownKeys = {
    "task",
    "seed",
    "out.dir",
    "synthetic.vocab",
    "synthetic.train_pairs",
    "synthetic.valid_pairs",
    "synthetic.test_pairs",
    "synthetic.min_len",
    "synthetic.max_len",
    "data.train_source",
    "data.train_target",
    "data.valid_source",
    "data.valid_target",
    "data.test_source",
    "data.test_target",
    "vocab.source",
    "vocab.target",
    "model.layers",
    "model.hidden",
    "model.dropout",
    "train.lr",
    "train.epochs",
    "train.batch",
    "train.max_norm",
    "train.patience",
    "train.schedule",
    "retrain.lr",
    "retrain.epochs",
    "retrain.patience",
    "retrain.schedule",
    "prune.scheme",
    "prune.x",
    "analyze.x",
    "eval.max_decode",
};

bool known_key(const std::string& key) {
    for (const char* k : kKnownKeys) {
        if (key == k) return true;
    }
    return false;
}

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

Manifest Manifest::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open manifest: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_string(text, path);
}

Manifest Manifest::from_string(const std::string& text, const std::string& origin) {
    Manifest manifest;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        ++lineno;
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        start = end + 1;

        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw_format(origin + ":" + std::to_string(lineno) +
                         ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw_format(origin + ":" + std::to_string(lineno) +
                         ": empty key or value");
        }
        try {
            manifest.set(key, value);
        } catch (const Error& e) {
            throw Error(e.code(), origin + ":" + std::to_string(lineno) + ": " +
                                      e.what());
        }
    }
    return manifest;
}

void Manifest::set(const std::string& key, const std::string& value) {
    if (!known_key(key)) {
        throw_invalid("unknown manifest key: " + key);
    }
    values_[key] = value;
}

bool Manifest::has(const std::string& key) const {
    return values_.find(key) != values_.end();
}

std::string Manifest::get_string(const std::string& key,
                                 const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string Manifest::require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw_invalid("manifest is missing required key: " + key);
    }
    return it->second;
}

double Manifest::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0') {
        throw_invalid("manifest key " + key + ": not a number: " + it->second);
    }
    return v;
}

std::uint64_t Manifest::get_u64(const std::string& key,
                                std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0') {
        throw_invalid("manifest key " + key +
                      ": not a non-negative integer: " + it->second);
    }
    return v;
}

std::size_t Manifest::get_size(const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(get_u64(key, fallback));
}

} // namespace nmtprune
