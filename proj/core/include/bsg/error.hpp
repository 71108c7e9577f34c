#pragma once

#include <stdexcept>
#include <string>

namespace bsg {

/// Base class for every error raised by the library. The message is a single
/// line so the CLI can forward it verbatim to stderr.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace bsg
