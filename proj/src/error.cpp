#include "carhmm/error.hpp"

namespace carhmm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparsableRow: return "UnparsableRow";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::OutOfRangeCoordinate: return "OutOfRangeCoordinate";
    case ErrorCode::AntimeridianCrossing: return "AntimeridianCrossing";
    case ErrorCode::TooFewRecords: return "TooFewRecords";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::DegenerateGroup: return "DegenerateGroup";
    case ErrorCode::AllGroupsDegenerate: return "AllGroupsDegenerate";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ReducibleChain: return "ReducibleChain";
    case ErrorCode::AbsorbingState: return "AbsorbingState";
    case ErrorCode::NumericUnderflow: return "NumericUnderflow";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::OptimizerFailure: return "OptimizerFailure";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::AllRestartsFailed: return "AllRestartsFailed";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::TooShort: return "TooShort";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& what,
                    std::optional<std::size_t> line) {
  std::string msg(to_string(code));
  if (line) msg += "(line " + std::to_string(*line) + ")";
  if (!what.empty()) msg += ": " + what;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& what,
             std::optional<std::size_t> line)
    : std::runtime_error(compose(code, what, line)), code_(code), line_(line) {}

}  // namespace carhmm
