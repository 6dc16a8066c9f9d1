#include "elplug/el_statistic.hpp"

#include <cmath>
#include <limits>

#include "elplug/error.hpp"

namespace elplug {

ScaledStatReport evaluate_points(const PointSet& points, double a_n, const StatOptions& opts) {
  if (!(a_n > 0.0)) throw Error(ErrorKind::InvalidArgument, "a_n must be positive");
  ScaledStatReport rep;
  rep.a_n = a_n;
  rep.quad = try_quadratic_stat(points);

  if (opts.with_diagnostics) {
    const PointSet raw(points.points() * std::sqrt(static_cast<double>(points.n())));
    rep.diagnostics = diagnostics(raw, opts.diagnostic);
  }

  const double d_n = points.max_norm();
  if (points.p() <= 50 && d_n > 0.0) {
    rep.hull = check_hull(points);
    rep.hull_checked = true;
    if (!rep.hull.origin_interior) {
      rep.solution.lambda_hat = Vector::Zero(static_cast<Eigen::Index>(points.p()));
      rep.solution.status = SolveStatus::HullViolation;
      rep.solution.t_n = std::numeric_limits<double>::infinity();
      rep.statistic = rep.solution.t_n;
      return rep;
    }
  } else if (d_n == 0.0) {
    rep.hull = HullReport{false, 0.0};
    rep.hull_checked = true;
  }

  SolveOptions solve = opts.solve;
  if (!solve.initial && rep.quad) solve.initial = rep.quad->lambda_star;
  rep.solution = solve_dual(points, solve);
  rep.statistic = rep.solution.t_n / a_n;
  return rep;
}

ScaledStatReport el_statistic(const Evaluator& evaluator, const Vector& theta, const StatOptions& opts) {
  const auto& family = evaluator.family();
  if (!family.fitted()) throw Error(ErrorKind::PluginNotFitted, family.name() + ": plug-in estimators have not been fitted");
  return evaluate_points(PointSet(evaluator.points(theta)), family.a_n(evaluator.n()), opts);
}

ScaledStatReport el_statistic(const EstimatingFamily& family, const Observations& data, const Vector& theta,
                              const StatOptions& opts) {
  if (!family.fitted()) throw Error(ErrorKind::PluginNotFitted, family.name() + ": plug-in estimators have not been fitted");
  return el_statistic(Evaluator(family, data), theta, opts);
}

}  // namespace elplug
