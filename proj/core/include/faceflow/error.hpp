#pragma once

#include <stdexcept>
#include <string>

namespace faceflow {

// Error categories, mapped onto CLI exit codes by the tools.
enum class ErrorKind {
    invalid_argument,  // bad parameters, dimension mismatches, domain violations
    format,            // malformed or truncated files
    io,                // filesystem / OS level failures
    rank,              // underdetermined or degenerate fitting problem
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& msg) {
    throw Error(ErrorKind::invalid_argument, msg);
}
[[noreturn]] inline void throw_format(const std::string& msg) {
    throw Error(ErrorKind::format, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
    throw Error(ErrorKind::io, msg);
}
[[noreturn]] inline void throw_rank(const std::string& msg) {
    throw Error(ErrorKind::rank, msg);
}

}  // namespace faceflow
