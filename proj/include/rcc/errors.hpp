#pragma once

#include <stdexcept>
#include <string>

namespace rcc {

/// Broad failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
  Argument,             ///< bad scalar argument (n <= 0, sigma < 0, ...)
  InfeasibleAllocation, ///< resource vector violates the budget or the floor
  DegenerateClassifier, ///< w == 0 where an allocation needs a direction
  InvalidNoiseModel,
  BudgetTooSmall,
  InfeasibleSet,
  RankDeficient,
  UnattainableLoss,
  Config,
  Data,
  Io,
  Divergence,
  OracleFailure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace rcc
