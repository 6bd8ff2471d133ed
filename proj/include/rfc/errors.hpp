#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rfc {

enum class Errc {
  InvalidArgument,
  DomainError,
  DegenerateElevation,
  OutOfRange,
  ConfigMismatch,
  HeatmapTooSmall,
  MissingGainEntry,
  EmptyTrajectory,
  DegenerateMesh,
  NoVisibleSurface,
  AllPointsRemoved,
  EmptyCloud,
  SizeMismatch,
  TooLarge,
  ShapeMismatch,
  GraphCycle,
  NonFiniteLoss,
  ParseError,
  IoError,
  UnknownExperiment,
};

std::string_view errc_name(Errc code) noexcept;

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DomainError: return "DomainError";
    case Errc::DegenerateElevation: return "DegenerateElevation";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::HeatmapTooSmall: return "HeatmapTooSmall";
    case Errc::MissingGainEntry: return "MissingGainEntry";
    case Errc::EmptyTrajectory: return "EmptyTrajectory";
    case Errc::DegenerateMesh: return "DegenerateMesh";
    case Errc::NoVisibleSurface: return "NoVisibleSurface";
    case Errc::AllPointsRemoved: return "AllPointsRemoved";
    case Errc::EmptyCloud: return "EmptyCloud";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::TooLarge: return "TooLarge";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::GraphCycle: return "GraphCycle";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::UnknownExperiment: return "UnknownExperiment";
  }
  return "Unknown";
}

}  // namespace rfc
