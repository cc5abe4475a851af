#pragma once

#include <stdexcept>
#include <string>

namespace mvg4d {

// Error categories map 1:1 onto CLI exit codes and C API status values.
enum class ErrorCode {
    ok = 0,
    usage = 2,
    format = 3,
    numeric = 4,
    io = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct InvalidArgumentError : Error {
    explicit InvalidArgumentError(std::string message)
        : Error(ErrorCode::usage, std::move(message)) {}
};

struct FormatError : Error {
    explicit FormatError(std::string message)
        : Error(ErrorCode::format, std::move(message)) {}
};

struct NumericError : Error {
    explicit NumericError(std::string message)
        : Error(ErrorCode::numeric, std::move(message)) {}
};

struct IoError : Error {
    explicit IoError(std::string message)
        : Error(ErrorCode::io, std::move(message)) {}
};

} // namespace mvg4d
