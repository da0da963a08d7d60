#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace flipforge {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  invalid_input = 2,
  refused = 3,    // infeasible or deliberately declined (e.g. enumeration cap)
  numerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what, std::optional<std::size_t> index = std::nullopt);
  /// Offending element (comparison, column, row) when one can be named.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

class Refused : public Error {
 public:
  explicit Refused(const std::string& what) : Error(ErrorKind::refused, what) {}
};

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Malformed file; carries the position where parsing stopped.
class ParseError : public InvalidInput {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t byte_offset);
  std::size_t line() const noexcept { return line_; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t line_;
  std::size_t byte_offset_;
};

}  // namespace flipforge
