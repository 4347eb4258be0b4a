#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace llmprof {

enum class ErrorCode {
  kEmptyInput,
  kMalformedXml,
  kMalformedDocument,
  kMalformedCsv,
  kDuplicateQuestionId,
  kDuplicateOptionCode,
  kEmptyOptionSet,
  kHeaderMismatch,
  kUnknownOptionCode,
  kDuplicateQrid,
  kInvalidQrid,
  kUnknownColumn,
  kUnknownColumnInConfig,
  kColumnListedTwice,
  kTooFewOptions,
  kTooManyOptions,
  kUnknownGroupValue,
  kParaphraseBackendUnavailable,
  kEndpointError,
  kAllOptionsAbsent,
  kNonCategoricalColumn,
  kMissingColumn,
  kInvalidCode,
  kSchemeMismatch,
  kKTooLarge,
  kUnknownVariable,
  kMixedGroupVariables,
  kInvalidConfig,
  kIoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library carries one of the codes above so
/// callers (and the CLI exit path) can branch on the kind without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace llmprof
