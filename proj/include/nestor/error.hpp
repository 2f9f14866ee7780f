#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nestor {

enum class ErrorKind {
  EmptyDomain,
  OutOfRange,
  EmptyBand,
  Degenerate,
  BracketFailure,
  NonNested,
  ZeroSpeed,
  NoBoundaryOracle,
  InsufficientPairs,
  NonMonotoneSign,
  UnknownScenario,
  InsufficientRange,
  InvalidArgument,
  Config,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the splitting-map search when psi_x(y) has several sign changes.
class NonNestedError : public Error {
 public:
  NonNestedError(const std::string& what, std::vector<double> roots);
  const std::vector<double>& roots() const noexcept { return roots_; }

 private:
  std::vector<double> roots_;
};

}  // namespace nestor
