#pragma once

#include <stdexcept>
#include <string>

namespace bnn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or geometry do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong lifecycle state
/// (e.g. backward without a cached training forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or similar numeric breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrc {
  kTruncated,
  kBadMagic,
  kUnknownKind,
  kVersionMismatch,
  kUnsupportedType,
  kMalformed,
  kFingerprintMismatch,
};

inline const char* to_string(FormatErrc code) {
  switch (code) {
    case FormatErrc::kTruncated: return "truncated";
    case FormatErrc::kBadMagic: return "bad magic";
    case FormatErrc::kUnknownKind: return "unknown kind";
    case FormatErrc::kVersionMismatch: return "version mismatch";
    case FormatErrc::kUnsupportedType: return "unsupported type";
    case FormatErrc::kMalformed: return "malformed";
    case FormatErrc::kFingerprintMismatch: return "fingerprint mismatch";
  }
  return "unknown";
}

/// Rejected on-disk bytes. `code()` tells the failure classes apart.
class FormatError : public Error {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}

  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

}  // namespace bnn
