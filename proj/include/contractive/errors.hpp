#pragma once

#include <stdexcept>
#include <string>

namespace contractive {

/// Numerical failure inside a solver (eigensolver breakdown, no root, runaway shift).
class SolverError : public std::runtime_error {
 public:
  SolverError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// The matrix (or path sample) has μ₂ + target ≥ 0, so m* is undefined.
class NotContractive : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Malformed input text. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column, const std::string& source = "")
      : std::runtime_error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ": " + message),
        message_(message),
        source_(source),
        line_(line),
        column_(column) {}

  /// Same error attributed to a named input (usually a file path).
  ParseError in(const std::string& source) const { return ParseError(message_, line_, column_, source); }

  const std::string& message() const noexcept { return message_; }
  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string message_;
  std::string source_;
  int line_;
  int column_;
};

}  // namespace contractive
