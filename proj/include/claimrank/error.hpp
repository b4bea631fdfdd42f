#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace claimrank {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the source name and 1-based line (0 if unknown).
class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : Error(source + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
          source_(std::move(source)), line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

/// Data violates a documented invariant (duplicate ids, dangling references, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A model or index required by the requested operation has not been built.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

}  // namespace claimrank
