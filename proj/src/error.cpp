#include "llmprof/error.hpp"

namespace llmprof {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMalformedXml: return "MalformedXml";
    case ErrorCode::kMalformedDocument: return "MalformedDocument";
    case ErrorCode::kMalformedCsv: return "MalformedCsv";
    case ErrorCode::kDuplicateQuestionId: return "DuplicateQuestionId";
    case ErrorCode::kDuplicateOptionCode: return "DuplicateOptionCode";
    case ErrorCode::kEmptyOptionSet: return "EmptyOptionSet";
    case ErrorCode::kHeaderMismatch: return "HeaderMismatch";
    case ErrorCode::kUnknownOptionCode: return "UnknownOptionCode";
    case ErrorCode::kDuplicateQrid: return "DuplicateQrid";
    case ErrorCode::kInvalidQrid: return "InvalidQrid";
    case ErrorCode::kUnknownColumn: return "UnknownColumn";
    case ErrorCode::kUnknownColumnInConfig: return "UnknownColumnInConfig";
    case ErrorCode::kColumnListedTwice: return "ColumnListedTwice";
    case ErrorCode::kTooFewOptions: return "TooFewOptions";
    case ErrorCode::kTooManyOptions: return "TooManyOptions";
    case ErrorCode::kUnknownGroupValue: return "UnknownGroupValue";
    case ErrorCode::kParaphraseBackendUnavailable: return "ParaphraseBackendUnavailable";
    case ErrorCode::kEndpointError: return "EndpointError";
    case ErrorCode::kAllOptionsAbsent: return "AllOptionsAbsent";
    case ErrorCode::kNonCategoricalColumn: return "NonCategoricalColumn";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kInvalidCode: return "InvalidCode";
    case ErrorCode::kSchemeMismatch: return "SchemeMismatch";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kUnknownVariable: return "UnknownVariable";
    case ErrorCode::kMixedGroupVariables: return "MixedGroupVariables";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace llmprof
