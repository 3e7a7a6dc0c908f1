#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace knng {

// The CLI maps these onto exit codes 2 / 3 / 4 respectively.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FormatError : std::runtime_error {
    FormatError(const std::string& what, std::uint64_t byte_offset)
        : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::uint64_t offset;
};

struct OracleCapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace knng
