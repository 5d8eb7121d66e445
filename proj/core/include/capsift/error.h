#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace capsift {

/// Base class for every error the library reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid caller input (bad arguments, degenerate datasets, config values).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A located failure while reading a text file: the message carries
/// "<source>:<line>: <reason>" and the pieces stay accessible.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& reason)
      : Error(source + ":" + std::to_string(line) + ": " + reason),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace capsift
