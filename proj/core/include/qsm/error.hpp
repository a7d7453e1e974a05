#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsm {

enum class ErrorKind {
  InvalidDimension,
  Shape,
  DegenerateFactorization,
  DegenerateMeasurement,
  DegenerateInitialization,
  IllConditionedStep,
  Vocabulary,
  Configuration,
  InvariantViolation,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so that callers (the CLI
/// in particular) can map it onto an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace qsm
