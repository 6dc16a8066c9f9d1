#pragma once

#include "elplug/types.hpp"

namespace elplug::lp {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  Vector x;      // primal solution
  Vector duals;  // simplex multipliers, one per equality row
};

/// Dense two-phase simplex for
///   minimize c'x  subject to  A x = b,  x >= 0.
/// Intended for few rows (m) and many columns; each pivot costs O(m * N).
LpResult solve_standard_form(const Matrix& a, const Vector& b, const Vector& c);

}  // namespace elplug::lp
