#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poissonseg {

/// Every failure the library can report. Each kind maps to one stable
/// name, which is what the CLI prints.
enum class ErrorKind {
  WindowTooLarge,
  LengthMismatch,
  UpsampleRequested,
  GridMismatch,
  DegenerateMask,
  KTooLarge,
  DimensionMismatch,
  NoLabels,
  DisconnectedGraph,
  TooLargeForDirect,
  ShapeMismatch,
  NonFiniteValue,
  InvalidArgument,
  BadMagic,
  TruncatedPayload,
  UnknownDtype,
  IoError,
  ManifestError,
};

constexpr std::string_view error_class_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::WindowTooLarge: return "WindowTooLarge";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::UpsampleRequested: return "UpsampleRequested";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::DegenerateMask: return "DegenerateMask";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoLabels: return "NoLabels";
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::TooLargeForDirect: return "TooLargeForDirect";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::UnknownDtype: return "UnknownDtype";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ManifestError: return "ManifestError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Error(ErrorKind kind, const std::string& message, std::string stage)
      : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view class_name() const noexcept { return error_class_name(kind_); }

  /// Pipeline stage that raised the error; empty outside run_episode.
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace detail
}  // namespace poissonseg
