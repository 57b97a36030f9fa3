#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace animgan {

/// Broad failure category. The command-line tool maps these onto exit codes.
enum class ErrorKind {
  Usage,    // caller violated a precondition (bad argument, bad config)
  Data,     // malformed or inconsistent input data
  Numeric,  // non-finite values, failed numerical checks
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by the BVH reader; carries the 1-based line of the offending token.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::Data, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) {
    throw Error(kind, message);
  }
}

}  // namespace animgan
