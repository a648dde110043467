#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qm {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something the library cannot work with.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A clustering is not a partition of its features, or holds two features of
// one image in a cluster.
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Internal invariant broken; always a bug, never bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace qm
