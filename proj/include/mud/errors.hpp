#pragma once

#include <stdexcept>
#include <string>

namespace mud {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Trace decoding failures (PCAP, JSONL, DNS wire format).
struct IngestError : Error {
  enum class Kind {
    kBadMagic,
    kUnsupportedLinkType,
    kTruncatedRecord,
    kMalformedLine,
    kFieldOutOfRange,
    kTruncatedMessage,
    kCompressionLoop,
  };

  IngestError(Kind kind, std::string message, int line = 0, std::string field = {})
      : Error(std::move(message)), kind(kind), line(line), field(std::move(field)) {}

  Kind kind;
  int line;           // 1-based line number for JSONL errors, 0 otherwise
  std::string field;  // offending field for kFieldOutOfRange
};

struct CaptureError : Error {
  enum class Kind { kInvalidConfig, kNoMatch, kOutOfOrderTimestamp };

  CaptureError(Kind kind, std::string message) : Error(std::move(message)), kind(kind) {}

  Kind kind;
};

/// Rejection while parsing a MUD document in strict mode.
struct MudSyntaxError : Error {
  MudSyntaxError(std::string path, std::string reason)
      : Error(path + ": " + reason), path(std::move(path)), reason(std::move(reason)) {}

  std::string path;
  std::string reason;
};

struct CanonicalError : Error {
  enum class Kind { kOverlappingActionConflict };

  CanonicalError(Kind kind, std::string message) : Error(std::move(message)), kind(kind) {}

  Kind kind;
};

struct MetagraphError : Error {
  enum class Kind { kSearchSpaceTooLarge };

  MetagraphError(Kind kind, std::string message) : Error(std::move(message)), kind(kind) {}

  Kind kind;
};

struct ComplianceError : Error {
  enum class Kind { kUnknownZone, kBadZoneFile };

  ComplianceError(Kind kind, std::string message) : Error(std::move(message)), kind(kind) {}

  Kind kind;
};

}  // namespace mud
