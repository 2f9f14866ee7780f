#include "nestor/error.hpp"

namespace nestor {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyDomain: return "EmptyDomain";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::EmptyBand: return "EmptyBand";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::NonNested: return "NonNested";
    case ErrorKind::ZeroSpeed: return "ZeroSpeed";
    case ErrorKind::NoBoundaryOracle: return "NoBoundaryOracle";
    case ErrorKind::InsufficientPairs: return "InsufficientPairs";
    case ErrorKind::NonMonotoneSign: return "NonMonotoneSign";
    case ErrorKind::UnknownScenario: return "UnknownScenario";
    case ErrorKind::InsufficientRange: return "InsufficientRange";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

NonNestedError::NonNestedError(const std::string& what, std::vector<double> roots)
    : Error(ErrorKind::NonNested, what), roots_(std::move(roots)) {}

}  // namespace nestor
