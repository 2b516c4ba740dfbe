#pragma once

#include <stdexcept>
#include <string>

namespace tokengate {

// Error taxonomy shared by library and CLI. The CLI maps categories to
// process exit codes (config -> 2, data/IO -> 3, numeric -> 4).
enum class Errc {
    invalid_argument,    // bad call arguments (counts, ranges, ratios)
    malformed_input,     // grid/mask violates its invariants
    dim_mismatch,        // shapes disagree between two inputs
    file_missing,        // path does not exist / cannot be opened
    malformed_header,    // bad magic, version, or header fields
    truncated_payload,   // payload byte count does not match the header
    invalid_value,       // non-finite float or non-binary mask byte
    budget_zero,         // floor(rho*T*N) == 0
    empty_retention,     // mask retains no token at all
    nonfinite_numeric,   // NaN/Inf in a loss or gradient
    config_error,        // unparseable or inconsistent configuration
    io_error,            // generic write/flush failure
};

class TgError : public std::runtime_error {
public:
    TgError(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw TgError(code, what);
}

inline const char* errc_name(Errc code) {
    switch (code) {
        case Errc::invalid_argument:  return "invalid_argument";
        case Errc::malformed_input:   return "malformed_input";
        case Errc::dim_mismatch:      return "dim_mismatch";
        case Errc::file_missing:      return "file_missing";
        case Errc::malformed_header:  return "malformed_header";
        case Errc::truncated_payload: return "truncated_payload";
        case Errc::invalid_value:     return "invalid_value";
        case Errc::budget_zero:       return "budget_zero";
        case Errc::empty_retention:   return "empty_retention";
        case Errc::nonfinite_numeric: return "nonfinite_numeric";
        case Errc::config_error:      return "config_error";
        case Errc::io_error:          return "io_error";
    }
    return "unknown";
}

} // namespace tokengate
