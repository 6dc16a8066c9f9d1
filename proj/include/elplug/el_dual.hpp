#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "elplug/types.hpp"

namespace elplug {

/// Scaled estimating-function values X_i (one row each) with optional
/// positive observation weights tau_i. Unweighted sets behave as tau_i = 1.
class PointSet {
 public:
  explicit PointSet(Matrix points, Vector obs_weights = Vector());
  /// Builds from per-point vectors; throws DimensionMismatch on ragged input.
  static PointSet from_rows(const std::vector<Vector>& rows, Vector obs_weights = Vector());

  std::size_t n() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  const Matrix& points() const noexcept { return points_; }
  bool weighted() const noexcept { return weights_.size() > 0; }
  double weight(std::size_t i) const { return weighted() ? weights_(static_cast<Eigen::Index>(i)) : 1.0; }
  Vector weights() const;
  double total_weight() const;
  /// D_n = max_i ||X_i||.
  double max_norm() const;

 private:
  Matrix points_;
  Vector weights_;
};

enum class SolveStatus { Converged, HullViolation, SingularSystem, MaxIterations };

std::string_view to_string(SolveStatus status);

struct SolveOptions {
  /// Tolerance on ||grad G||_inf / (sum(tau) * max(1, D_n)).
  double grad_tol = 1e-10;
  int max_iterations = 100;
  /// Starting multiplier; when absent the solver starts at lambda* = V^{-1} U.
  std::optional<Vector> initial;
  /// ||lambda|| * D_n above divergence_factor * p is treated as a hull violation.
  double divergence_factor = 1e6;
};

struct ELSolution {
  Vector lambda_hat;
  /// -2 log EL = G(lambda_hat); +inf when the hull condition fails.
  double t_n = 0.0;
  /// Implied multinomial weights w_i = tau_i / (sum(tau) (1 + lambda' X_i)).
  Vector weights;
  SolveStatus status = SolveStatus::Converged;
  int iterations = 0;
  double grad_norm = 0.0;

  bool converged() const noexcept { return status == SolveStatus::Converged; }
};

struct QuadApprox {
  Vector u_n;         // sum tau_i X_i
  Matrix v_n;         // sum tau_i X_i X_i'
  Vector lambda_star; // V^{-1} U
  double t_star = 0.0;
};

struct HullReport {
  bool origin_interior = false;
  /// max over unit u of min_i u'X_i when the origin is not interior (>= 0);
  /// a certified upper bound (< 0) on that maximum when it is.
  double margin = 0.0;
};

/// Exact interior test for the origin against conv{X_i}.
HullReport check_hull(const PointSet& ps);

/// G(lambda) = 2 sum tau_i log(1 + lambda'X_i); -inf outside the domain.
double dual_objective(const PointSet& ps, const Vector& lambda);
/// Gradient of G.
Vector dual_gradient(const PointSet& ps, const Vector& lambda);

/// Maximizes the concave dual by damped Newton with backtracking.
ELSolution solve_dual(const PointSet& ps, const SolveOptions& opts = {});

/// U_n, V_n, lambda* and t* = U'V^{-1}U. Throws SingularSystem (with rank)
/// when V_n is not invertible.
QuadApprox quadratic_stat(const PointSet& ps);
/// Same, but returns nullopt instead of throwing on a singular V_n.
std::optional<QuadApprox> try_quadratic_stat(const PointSet& ps);

/// Numerical rank of a symmetric PSD matrix.
std::size_t symmetric_rank(const Matrix& m, double rel_tol = 1e-12);

}  // namespace elplug
