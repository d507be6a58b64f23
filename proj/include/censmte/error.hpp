#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace censmte {

enum class ErrorCode : int {
  kInvalidArgument = 1,
  kIo = 2,
  kParse = 3,
  kMissingColumn = 4,
  kInvariantViolation = 5,
  kSingletonDecider = 6,
  kEmptyResult = 7,
  kRankDeficient = 8,
  kDegenerateTreatment = 9,
  kTooFewClusters = 10,
  kNonconvergence = 11,
  kAllSameOutcome = 12,
  kUnusableCell = 13,
  kInvalidHorizon = 14,
  kEmptyDeltaGrid = 15,
  kReplicateFailure = 16,
  kInvalidSpec = 17,
  kNoClosedForm = 18,
  kOverlap = 19,
  kInternal = 99,
};

const char* errorCodeName(ErrorCode code) noexcept;

// Every library failure carries a code and a JSON payload with the details
// (row, column, cell index, ...) so the C layer can forward both untouched.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  nlohmann::json toJson() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace censmte
