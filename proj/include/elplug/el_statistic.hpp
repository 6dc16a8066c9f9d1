#pragma once

#include <optional>

#include "elplug/el_dual.hpp"
#include "elplug/estfun.hpp"
#include "elplug/growingp.hpp"

namespace elplug {

struct StatOptions {
  SolveOptions solve;
  bool with_diagnostics = false;
  DiagnosticOptions diagnostic;
};

struct ScaledStatReport {
  /// t_n / a_n; +inf on a hull violation.
  double statistic = 0.0;
  double a_n = 1.0;
  ELSolution solution;
  std::optional<QuadApprox> quad;
  bool hull_checked = false;
  HullReport hull;
  std::optional<DiagnosticsReport> diagnostics;
};

/// Hull check (p <= 50), then the dual solve warm-started at lambda*.
ScaledStatReport evaluate_points(const PointSet& points, double a_n, const StatOptions& opts = {});

/// Statistic of a fitted family at theta.
ScaledStatReport el_statistic(const EstimatingFamily& family, const Observations& data, const Vector& theta,
                              const StatOptions& opts = {});
ScaledStatReport el_statistic(const Evaluator& evaluator, const Vector& theta, const StatOptions& opts = {});

}  // namespace elplug
