#include "fdr/error.hpp"

namespace fdr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonpositiveCurvature: return "NonpositiveCurvature";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorCode::TooFewReps: return "TooFewReps";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace fdr
