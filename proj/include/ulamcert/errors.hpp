#pragma once

#include <stdexcept>
#include <string>

namespace ulamcert {

// All failures surface as typed exceptions; callers that can recover
// (e.g. the CLI turning an unreached contraction target into an
// inconclusive report) catch the specific type.

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonSmoothError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t pos)
        : std::runtime_error(what + " at position " + std::to_string(pos)), position(pos) {}
    std::size_t position;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotExpandingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PrecisionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExpansionTooWeak : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ulamcert
