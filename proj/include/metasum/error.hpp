#pragma once

#include <stdexcept>
#include <string>

namespace metasum {

/// Error categories, mapped one-to-one onto CLI exit codes.
enum class ErrorKind {
    empty_input,
    parse,
    schema,
    precondition,
    size,
    shape,
    contract,
    config,
    degenerate_data,
    alignment,
    dependency,
    staleness,
    locked,
    io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse errors carry the 1-based line number of the offending record.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what)
{
    if (!cond)
        fail(kind, what);
}

} // namespace metasum
