#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netkde {

enum class ErrorCode {
  InvalidArgument,
  ZeroLengthEdge,
  InteriorIntersection,
  CoincidentVertices,
  DanglingReference,
  IsolatedVertex,
  LocationOffNetwork,
  TooFarFromNetwork,
  ParseError,
  GeometryTypeError,
  AllPointsTooFar,
  IoError,
  EmptyPattern,
  UnboundedKernel,
  PathExplosion,
  StabilityViolation,
  OverlappingSubsets,
  NonpositivePilot,
  BadDelta,
  CholeskyFailure,
  OutOfDomain,
  LatticeMismatch,
};

std::string_view to_string(ErrorCode code);

// Numerical failures map to CLI exit code 3; everything else is an input error.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace netkde
