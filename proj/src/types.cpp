#include "elplug/types.hpp"

#include <string>

#include "elplug/error.hpp"

namespace elplug {

namespace {

constexpr std::string_view kKindNames[] = {
    "InvalidArgument",   "DimensionMismatch",    "EmptySample",         "HullViolation",
    "SingularSystem",    "MaxIterations",        "PluginNotFitted",     "SingularV2",
    "BandwidthOutOfRange", "NonpositiveBandwidth", "DivisionByZeroRisk", "ThetaOutOfRange",
    "DensityFloorViolated", "Overflow",          "EmptyWindow",         "NotPositiveDefinite",
    "PluginRefitFailure", "NoRoot",              "UnknownScenario",     "UnknownFamily",
    "Unsupported",       "Io",                   "Usage",
};

}  // namespace

std::string_view to_string(ErrorKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

Observations::Observations(RowMatrix values) : values_(std::move(values)) {}

Observations::Observations(std::size_t n, std::size_t d)
    : values_(RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d))) {}

Observations Observations::from_column(std::span<const double> values) {
  Observations obs(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) obs(i, 0) = values[i];
  return obs;
}

std::vector<double> Observations::column(std::size_t j) const {
  if (j >= dim()) throw Error(ErrorKind::DimensionMismatch, "column index out of range");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = values_(i, j);
  return out;
}

Observations Observations::subset(std::span<const std::size_t> indices) const {
  Observations out(indices.size(), dim());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.values_.row(static_cast<Eigen::Index>(k)) = values_.row(static_cast<Eigen::Index>(indices[k]));
  }
  return out;
}

}  // namespace elplug
