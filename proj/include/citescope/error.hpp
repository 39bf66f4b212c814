#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace citescope {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration or command-line usage (exit code 1).
class UsageError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent input data (exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A paper the provider does not know about. Terminal for that node.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Transport failure or exhausted retries against a remote provider
// (exit code 3). Retrying later may succeed.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace citescope
