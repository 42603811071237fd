#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tailbench {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent user configuration (CLI exit code 1).
struct config_error : error {
    using error::error;
};

// Malformed input file; carries a 1-based row and 0-based column when known.
struct parse_error : error {
    parse_error(const std::string& msg, long row = -1, long col = -1)
        : error(msg), row(row), col(col) {}
    long row;
    long col;
};

// The spectral assumptions (positive singular values, response outside the
// column space) do not hold for the given data.
struct assumption_violation : error {
    using error::error;
};

// Degenerate input such as a constant data matrix.
struct degenerate_input : error {
    using error::error;
};

// An iterate or SDE state left the configured finite range.
struct divergence_error : error {
    divergence_error(const std::string& msg, long step) : error(msg), step(step) {}
    long step;
};

// FNV-1a over raw bytes; used for dataset digests and artifact manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex_digest(std::uint64_t h);

}  // namespace tailbench
