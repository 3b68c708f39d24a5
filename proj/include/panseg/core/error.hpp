#pragma once

#include <stdexcept>
#include <string>

namespace panseg {

// Error categories; the CLI maps these onto distinct process exit codes.
enum class Errc {
    invalid_argument,
    config,
    io,
    bad_magic,
    truncated,
    dims_overflow,
    divergence,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

} // namespace panseg
