#include "cce/error.hpp"

namespace cce {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotCoveringUnit: return "NotCoveringUnit";
    case ErrorCode::NotStrictlyIncreasing: return "NotStrictlyIncreasing";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::InvalidSample: return "InvalidSample";
    case ErrorCode::AllZeroComponents: return "AllZeroComponents";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DidNotConverge: return "DidNotConverge";
    case ErrorCode::LevelOutOfMeshRange: return "LevelOutOfMeshRange";
    case ErrorCode::MeshGridIncompatible: return "MeshGridIncompatible";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::InvalidBootstrapSpec: return "InvalidBootstrapSpec";
    case ErrorCode::TooManyDegenerateReplicates: return "TooManyDegenerateReplicates";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace cce
