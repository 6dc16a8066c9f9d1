#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "elplug/el_dual.hpp"
#include "elplug/types.hpp"

namespace elplug {

struct Scenario;

/// Thresholds turning the growth conditions into pass/fail flags.
struct DiagnosticGates {
  double d1 = 1.0;          // p D_n / sqrt(n)
  double d4_eig_max = 10.0; // max eig(S_n)
  double d5 = 1.0;          // p^{3/2} L_n
  double d6_eig_min = 0.1;
  double d6_eig_max = 10.0;
};

struct DiagnosticOptions {
  std::optional<Matrix> sigma_n;
  /// Moment order for the p^{3+6/(q-2)}/n ratio and the L_n tail bound.
  std::optional<double> q;
  double epsilon = 0.1;  // L_n tail bound is reported at this epsilon
  double c_q = 1.0;      // user-supplied constant of the tail bound
  DiagnosticGates gates;
  /// Hull check is run only up to this dimension.
  std::size_t hull_max_p = 50;
};

struct GrowthRatios {
  double p3_over_n = 0.0;
  double plogp_over_n = 0.0;
  std::optional<double> moment_ratio;  // p^{3+6/(q-2)}/n
};

struct ConditionFlags {
  bool d1 = false;
  bool d4 = false;
  std::optional<bool> d5;  // needs sigma_n
  bool d6 = false;         // eigenvalue proxy on sigma_n when given, else S_n
};

struct DiagnosticsReport {
  std::size_t n = 0;
  std::size_t p = 0;
  double d_n = 0.0;
  bool hull_checked = false;
  HullReport hull;
  double eig_min = 0.0;
  double eig_max = 0.0;
  std::optional<double> l_n;
  std::optional<double> sigma_eig_min;
  std::optional<double> sigma_eig_max;
  /// Eigenvalue range of S_n within p L_n of that of sigma_n.
  std::optional<bool> eig_range_within_bound;
  GrowthRatios growth;
  /// c(q) p^2 A_n(p,q)^2 / (eps^q n^{q/2}) with sample moments for A_n.
  std::optional<double> ln_tail_bound;
  ConditionFlags flags;
};

/// Diagnostics for raw (unscaled) points X_i; S_n = n^{-1} sum X_i X_i'.
DiagnosticsReport diagnostics(const PointSet& raw_points, const DiagnosticOptions& opts = {});

struct GapSample {
  double t_n = 0.0;
  double t_star = 0.0;
  SolveStatus status = SolveStatus::Converged;
};

struct GapStudy {
  std::vector<GapSample> samples;
  std::size_t hull_violations = 0;
  std::size_t other_failures = 0;
  /// Mean of |t_n - t_star| / sqrt(p) over converged replicates.
  double mean_abs_gap = 0.0;
  double mean_gap = 0.0;
};

/// Paired (t_n, t_star) at the scenario's true parameter, with points X_i / sqrt(n).
GapStudy dual_gap_study(const Scenario& scenario, std::size_t reps, std::uint64_t seed, std::size_t threads = 1);

struct NormalityCheck {
  double z_mean = 0.0;
  double z_var = 0.0;
  double ks_stat = 0.0;
};

/// Standardizes t to (t - p) / sqrt(2p) and compares with N(0, 1).
NormalityCheck normality_check(const std::vector<double>& t_samples, std::size_t p);

}  // namespace elplug
