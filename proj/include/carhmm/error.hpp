#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace carhmm {

enum class ErrorCode {
  MissingColumn,
  UnparsableRow,
  NonMonotonicTime,
  OutOfRangeCoordinate,
  AntimeridianCrossing,
  TooFewRecords,
  IoError,
  SchemaMismatch,
  InvalidModel,
  CoincidentPoints,
  DegenerateGroup,
  AllGroupsDegenerate,
  DomainError,
  ReducibleChain,
  AbsorbingState,
  NumericUnderflow,
  NonFinite,
  OptimizerFailure,
  NonFiniteObjective,
  AllRestartsFailed,
  LengthMismatch,
  DegenerateSeries,
  TooShort,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a stable code and, for file parsing, the 1-based line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace carhmm
