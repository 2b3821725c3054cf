#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace datalabel {

enum class ErrorCode {
  kParse,
  kInvalidArgument,
  kUnknownRecord,
  kAlreadyLabeled,
  kEmptyText,
  kIo,
  kVersionMismatch,
  kNumeric,
  kConfig,
  kNoSession,
};

/// Machine-readable name used in service error bodies ("unknown_record", ...).
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace datalabel
