#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace elplug {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  EmptySample,
  HullViolation,
  SingularSystem,
  MaxIterations,
  PluginNotFitted,
  SingularV2,
  BandwidthOutOfRange,
  NonpositiveBandwidth,
  DivisionByZeroRisk,
  ThetaOutOfRange,
  DensityFloorViolated,
  Overflow,
  EmptyWindow,
  NotPositiveDefinite,
  PluginRefitFailure,
  NoRoot,
  UnknownScenario,
  UnknownFamily,
  Unsupported,
  Io,
  Usage,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries the kind of the module-level
/// error so callers (and the CLI) can report it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace elplug
