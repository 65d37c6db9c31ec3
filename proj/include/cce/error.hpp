#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cce {

enum class ErrorCode {
  NotCoveringUnit,
  NotStrictlyIncreasing,
  TooFewPoints,
  InvalidSample,
  AllZeroComponents,
  GridMismatch,
  DimensionMismatch,
  InvalidLevel,
  InvalidInterval,
  RankDeficient,
  DidNotConverge,
  LevelOutOfMeshRange,
  MeshGridIncompatible,
  InvalidDistribution,
  InvalidBootstrapSpec,
  TooManyDegenerateReplicates,
  FileNotFound,
  ParseError,
  EmptyAfterFiltering,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cce
