#include "mirflex/error.h"

namespace mirflex {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kNotFound: return "NotFound";
    case ErrorKind::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::kCorruptHeader: return "CorruptHeader";
    case ErrorKind::kAliasedFrequency: return "AliasedFrequency";
    case ErrorKind::kBpmOutOfRange: return "BpmOutOfRange";
    case ErrorKind::kEmptySignal: return "EmptySignal";
    case ErrorKind::kInsufficientResolution: return "InsufficientResolution";
    case ErrorKind::kWrongBinning: return "WrongBinning";
    case ErrorKind::kLagTooLarge: return "LagTooLarge";
    case ErrorKind::kDuplicateId: return "DuplicateId";
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
    case ErrorKind::kOutputUnwritable: return "OutputUnwritable";
    case ErrorKind::kSilentInput: return "SilentInput";
    case ErrorKind::kTooShort: return "TooShort";
    case ErrorKind::kNoPeriodicity: return "NoPeriodicity";
    case ErrorKind::kTooFewBeats: return "TooFewBeats";
    case ErrorKind::kMissingFeature: return "MissingFeature";
    case ErrorKind::kSpawnFailed: return "SpawnFailed";
    case ErrorKind::kHandshakeTimeout: return "HandshakeTimeout";
    case ErrorKind::kProtocolViolation: return "ProtocolViolation";
    case ErrorKind::kPluginError: return "PluginError";
    case ErrorKind::kPluginBadRecord: return "PluginBadRecord";
    case ErrorKind::kTimeout: return "Timeout";
    case ErrorKind::kBrokenPipe: return "BrokenPipe";
    case ErrorKind::kDeadHandle: return "DeadHandle";
    case ErrorKind::kOverlappingSegments: return "OverlappingSegments";
    case ErrorKind::kNoOverlap: return "NoOverlap";
    case ErrorKind::kParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::string detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(std::move(detail)) {}

}  // namespace mirflex
