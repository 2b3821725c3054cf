#include "datalabel/error.hpp"

namespace datalabel {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kUnknownRecord: return "unknown_record";
    case ErrorCode::kAlreadyLabeled: return "already_labeled";
    case ErrorCode::kEmptyText: return "empty_text";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kNumeric: return "numeric_error";
    case ErrorCode::kConfig: return "config_error";
    case ErrorCode::kNoSession: return "no_session";
  }
  return "error";
}

}  // namespace datalabel
