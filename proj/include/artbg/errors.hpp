#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace artbg {

/// Precondition violated by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function (e.g. H_m(0)).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two operands whose metadata (wavenumber, grids, convention) disagree.
class IncompatibleOperands : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedShape : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoPeaks : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed artifact or configuration text. Carries the 1-based line number
/// (0 when the problem is not tied to a line, e.g. a truncated file).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File content is well formed but does not match what the caller asked for.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace artbg
