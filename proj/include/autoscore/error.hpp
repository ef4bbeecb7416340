#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autoscore {

enum class ErrorCode {
  InvalidArgument,
  InvalidComponent,
  MissingComponent,
  UnknownPreset,
  TransportError,
  AuthError,
  CacheMiss,
  NoRatingFound,
  UnknownLabelToken,
  OffScaleLabel,
  ScoringFailure,
  ParseError,
  UnknownLabel,
  DuplicateResponseId,
  EmptyMatrix,
  DivideByZero,
  ConfigError,
  OverlapError,
  InvalidTransition,
  NotFound,
  IoError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above. The C
// boundary maps codes onto status values; nothing else crosses it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, bool retryable = false)
      : std::runtime_error(message), code_(code), retryable_(retryable) {}

  ErrorCode code() const noexcept { return code_; }
  // Only meaningful for TransportError: the gateway retries these.
  bool retryable() const noexcept { return retryable_; }

 private:
  ErrorCode code_;
  bool retryable_;
};

}  // namespace autoscore
