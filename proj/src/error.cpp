#include "censmte/error.hpp"

namespace censmte {

const char* errorCodeName(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kSingletonDecider: return "SingletonDecider";
    case ErrorCode::kEmptyResult: return "EmptyResult";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kDegenerateTreatment: return "DegenerateTreatment";
    case ErrorCode::kTooFewClusters: return "TooFewClusters";
    case ErrorCode::kNonconvergence: return "Nonconvergence";
    case ErrorCode::kAllSameOutcome: return "AllSameOutcome";
    case ErrorCode::kUnusableCell: return "UnusableCell";
    case ErrorCode::kInvalidHorizon: return "InvalidHorizon";
    case ErrorCode::kEmptyDeltaGrid: return "EmptyDeltaGrid";
    case ErrorCode::kReplicateFailure: return "ReplicateFailure";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kNoClosedForm: return "NoClosedForm";
    case ErrorCode::kOverlap: return "OverlapViolation";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

nlohmann::json Error::toJson() const {
  return {{"error", errorCodeName(code_)},
          {"code", static_cast<int>(code_)},
          {"message", what()},
          {"detail", detail_}};
}

}  // namespace censmte
