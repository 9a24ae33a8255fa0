#pragma once

#include <stdexcept>
#include <string>

namespace warpbridge {

enum class ErrorCode {
    InvalidArgument = 1,
    DimensionMismatch = 2,
    Io = 3,
    Numeric = 4,
    Convergence = 5,
    Protocol = 6,
    Internal = 7,
};

// Single exception type for the library; the code is what crosses the C boundary.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorCode::InvalidArgument, what);
}

inline void require(bool cond, const char* what) {
    if (!cond) fail(ErrorCode::InvalidArgument, what);
}

inline void require_dim(std::size_t got, std::size_t want, const char* where) {
    if (got != want)
        fail(ErrorCode::DimensionMismatch, std::string(where) + ": dimension " + std::to_string(got) +
                                               " does not match expected " + std::to_string(want));
}

} // namespace warpbridge
