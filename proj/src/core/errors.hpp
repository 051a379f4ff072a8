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

#ifndef NMTPRUNE_CORE_ERRORS_HPP
#define NMTPRUNE_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nmtprune {

// Error categories; the C API maps these one-to-one onto nmtp_status codes.
enum class ErrorCode {
    invalid_argument,
    io,
    format,
    state,
    numeric,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& message) {
    throw Error(ErrorCode::invalid_argument, message);
}

[[noreturn]] inline void throw_io(const std::string& message) {
    throw Error(ErrorCode::io, message);
}

[[noreturn]] inline void throw_format(const std::string& message) {
    throw Error(ErrorCode::format, message);
}

[[noreturn]] inline void throw_state(const std::string& message) {
    throw Error(ErrorCode::state, message);
}

[[noreturn]] inline void throw_numeric(const std::string& message) {
    throw Error(ErrorCode::numeric, message);
}

} // namespace nmtprune

#endif // NMTPRUNE_CORE_ERRORS_HPP
