#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elplug/el_statistic.hpp"
#include "elplug/estfun.hpp"
#include "elplug/limit_law.hpp"

namespace elplug {

/// a_n * sum of outer products of the scaled points at theta-hat.
Matrix v2_hat(const EstimatingFamily& family, const Observations& data, const Vector& theta_hat);

struct BootstrapOptions {
  std::size_t resamples = 999;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Use all n^n index tuples instead of random resamples (small n only).
  bool exhaustive = false;
};

struct BootstrapResult {
  double threshold = 0.0;
  BootstrapEmpirical law;
  Matrix v2;
};

/// Percentile threshold of n [M*(theta-hat, h*) - M(theta-hat, h)]' V2^{-1} [...],
/// refitting the plug-ins on every resample. `family` must be fitted on `data`.
BootstrapResult bootstrap_threshold(const EstimatingFamily& family, const Observations& data,
                                    const Vector& theta_hat, const BootstrapOptions& opts = {});

enum class CalibrationKind {
  ChiSquare,  // chi^2_p regardless of the family
  Family,     // the family's reference law (factor 4, eigenvalue weights, ...)
  Bootstrap,
  Explicit,   // a caller-supplied law
};

CalibrationKind parse_calibration(const std::string& name);
std::string to_string(CalibrationKind kind);

struct CalibrationSpec {
  CalibrationKind kind = CalibrationKind::Family;
  std::optional<LimitLaw> law;  // for Explicit
  std::size_t resamples = 999;
  std::size_t draws = kDefaultLawDraws;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct Threshold {
  double value = 0.0;
  LimitLaw law;
};

/// Reference law and its quantile at `level` for a fitted family.
Threshold calibrate_threshold(const EstimatingFamily& family, const Observations& data, const CalibrationSpec& spec,
                              double level);

struct IntervalOptions {
  /// Endpoint search stops once |t/a_n - c| <= rel_tol * c.
  double rel_tol = 1e-7;
  int max_doublings = 80;
  SolveOptions solve;
};

struct ConfidenceInterval {
  double level = 0.0;
  double threshold = 0.0;
  double center = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = false;
  /// No theta reaches the threshold (possible when p > 1).
  bool empty = false;

  double width() const noexcept { return hi - lo; }
  bool contains(double theta) const noexcept;
};

/// Minimizer of t_n over scalar theta (the score root when p = 1).
double interval_center(const Evaluator& evaluator, const IntervalOptions& opts = {});

/// {theta : t_n(theta) / a_n <= threshold} for scalar theta, plug-ins held fixed.
ConfidenceInterval confidence_interval(const EstimatingFamily& family, const Observations& data, double threshold,
                                       double level, const IntervalOptions& opts = {});

struct ConfidenceRegion {
  double level = 0.0;
  double threshold = 0.0;
  std::function<bool(const Vector&)> contains;
};

/// Membership form for vector parameters. The returned test refers to
/// `family` and `data`, which must outlive it.
ConfidenceRegion confidence_region(const EstimatingFamily& family, const Observations& data, double threshold,
                                   double level, const SolveOptions& solve = {});

/// (theta, t_n(theta)/a_n) on an even grid over [lo, hi].
std::vector<std::pair<double, double>> statistic_curve(const EstimatingFamily& family, const Observations& data,
                                                       double lo, double hi, std::size_t points,
                                                       const SolveOptions& solve = {});

}  // namespace elplug
