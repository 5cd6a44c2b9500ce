#pragma once

#include <stdexcept>
#include <string>

namespace mirflex {

/// Failure categories raised across the library. Each maps to one named
/// error condition in the public contracts.
enum class ErrorKind {
  kInvalidArgument,
  kNotFound,
  kUnsupportedFormat,
  kCorruptHeader,
  kAliasedFrequency,
  kBpmOutOfRange,
  kEmptySignal,
  kInsufficientResolution,
  kWrongBinning,
  kLagTooLarge,
  kDuplicateId,
  kConfigInvalid,
  kOutputUnwritable,
  kSilentInput,
  kTooShort,
  kNoPeriodicity,
  kTooFewBeats,
  kMissingFeature,
  kSpawnFailed,
  kHandshakeTimeout,
  kProtocolViolation,
  kPluginError,
  kPluginBadRecord,
  kTimeout,
  kBrokenPipe,
  kDeadHandle,
  kOverlappingSegments,
  kNoOverlap,
  kParseError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string detail = {});

  ErrorKind kind() const noexcept { return kind_; }
  /// Offending item (field name, format tag, line) when one applies.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace mirflex
