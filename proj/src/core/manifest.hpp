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

#ifndef NMTPRUNE_CORE_MANIFEST_HPP
#define NMTPRUNE_CORE_MANIFEST_HPP

#include <cstdint>
#include <map>
#include <string>

namespace nmtprune {

// Experiment description: a plain "key = value" text file, one pair per
// line, # comments. Unknown keys are rejected. The full key reference
// lives in the README.
class Manifest {
public:
    Manifest() = default;

    static Manifest from_file(const std::string& path);
    static Manifest from_string(const std::string& text, const std::string& origin);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    // Required string: throws when the key is absent.
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace nmtprune

#endif // NMTPRUNE_CORE_MANIFEST_HPP
