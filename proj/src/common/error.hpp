#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace retro {

// Error categories surfaced through every layer, including the C API.
enum class ErrorKind {
    parse,       // syntax, scoping, declaration errors
    load,        // unbound constant, bad array size, initializer mismatch
    runtime,     // overflow, division by zero, index out of bounds
    schedule,    // scripted choice not enabled, exhausted script
    replay,      // log/program divergence
    engine,      // out-of-order observation, back at origin, engine disagreement
    request,     // malformed debugger request
    internal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Short machine-readable code, e.g. "at-origin" or "unknown-command".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

class ParseError : public Error {
public:
    ParseError(int line, int column, const std::string& message)
        : Error(ErrorKind::parse, "parse-error",
                std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

} // namespace retro
