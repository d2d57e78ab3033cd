#include "halo/error.hpp"

namespace halo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::InvalidNetlist: return "INVALID_NETLIST";
    case ErrorCode::NonFinite: return "NON_FINITE";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::IncompleteProfile: return "INCOMPLETE_PROFILE";
    case ErrorCode::MalformedFile: return "MALFORMED_FILE";
    case ErrorCode::EmptyCodebook: return "EMPTY_CODEBOOK";
    case ErrorCode::NoFeasibleLevel: return "NO_FEASIBLE_LEVEL";
    case ErrorCode::UnmappedClass: return "UNMAPPED_CLASS";
    case ErrorCode::TileTooLarge: return "TILE_TOO_LARGE";
    case ErrorCode::TimingViolation: return "TIMING_VIOLATION";
    case ErrorCode::IndexOutOfBounds: return "INDEX_OUT_OF_BOUNDS";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

}  // namespace halo
