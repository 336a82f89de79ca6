#include "netkde/error.hpp"

namespace netkde {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroLengthEdge: return "ZeroLengthEdge";
    case ErrorCode::InteriorIntersection: return "InteriorIntersection";
    case ErrorCode::CoincidentVertices: return "CoincidentVertices";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::IsolatedVertex: return "IsolatedVertex";
    case ErrorCode::LocationOffNetwork: return "LocationOffNetwork";
    case ErrorCode::TooFarFromNetwork: return "TooFarFromNetwork";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::GeometryTypeError: return "GeometryTypeError";
    case ErrorCode::AllPointsTooFar: return "AllPointsTooFar";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyPattern: return "EmptyPattern";
    case ErrorCode::UnboundedKernel: return "UnboundedKernel";
    case ErrorCode::PathExplosion: return "PathExplosion";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
    case ErrorCode::OverlappingSubsets: return "OverlappingSubsets";
    case ErrorCode::NonpositivePilot: return "NonpositivePilot";
    case ErrorCode::BadDelta: return "BadDelta";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::LatticeMismatch: return "LatticeMismatch";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  return code == ErrorCode::PathExplosion ||
         code == ErrorCode::StabilityViolation ||
         code == ErrorCode::CholeskyFailure;
}

}  // namespace netkde
