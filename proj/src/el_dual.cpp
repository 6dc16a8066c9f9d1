#include "elplug/el_dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "elplug/error.hpp"
#include "elplug/simplex.hpp"

namespace elplug {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Residual floor for 1 + lambda'X_i; equivalent to w_i <= 1.
Vector feasibility_floor(const PointSet& ps) {
  return ps.weights() / ps.total_weight();
}

bool feasible(const Vector& r, const Vector& floor) {
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (!(r(i) >= floor(i))) return false;
  }
  return true;
}

double objective_from_residuals(const PointSet& ps, const Vector& r) {
  double g = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (!(r(i) > 0.0)) return -kInf;
    g += ps.weight(static_cast<std::size_t>(i)) * std::log(r(i));
  }
  return 2.0 * g;
}

}  // namespace

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::HullViolation: return "HullViolation";
    case SolveStatus::SingularSystem: return "SingularSystem";
    case SolveStatus::MaxIterations: return "MaxIterations";
  }
  return "Unknown";
}

PointSet::PointSet(Matrix points, Vector obs_weights)
    : points_(std::move(points)), weights_(std::move(obs_weights)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw Error(ErrorKind::DimensionMismatch, "point set needs n >= 1 points of dimension p >= 1");
  }
  if (weights_.size() > 0) {
    if (weights_.size() != points_.rows()) {
      throw Error(ErrorKind::DimensionMismatch, "one observation weight per point required");
    }
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_(i) > 0.0) || !std::isfinite(weights_(i))) {
        throw Error(ErrorKind::InvalidArgument, "observation weights must be positive");
      }
    }
  }
  if (!points_.allFinite()) throw Error(ErrorKind::InvalidArgument, "points must be finite");
}

PointSet PointSet::from_rows(const std::vector<Vector>& rows, Vector obs_weights) {
  if (rows.empty()) throw Error(ErrorKind::DimensionMismatch, "empty point set");
  const Eigen::Index p = rows.front().size();
  Matrix pts(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) {
      throw Error(ErrorKind::DimensionMismatch,
                  "point " + std::to_string(i) + " has dimension " + std::to_string(rows[i].size()) +
                      ", expected " + std::to_string(p));
    }
    pts.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return PointSet(std::move(pts), std::move(obs_weights));
}

Vector PointSet::weights() const {
  return weighted() ? weights_ : Vector::Ones(points_.rows());
}

double PointSet::total_weight() const {
  return weighted() ? weights_.sum() : static_cast<double>(n());
}

double PointSet::max_norm() const { return points_.rowwise().norm().maxCoeff(); }

std::size_t symmetric_rank(const Matrix& m, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0;
  return static_cast<std::size_t>((ev.array() > rel_tol * top).count());
}

HullReport check_hull(const PointSet& ps) {
  const Matrix& x = ps.points();
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double d_n = ps.max_norm();
  if (d_n == 0.0) return {false, 0.0};

  if (p == 1) {
    const double lo = x.col(0).minCoeff();
    const double hi = x.col(0).maxCoeff();
    return {lo < 0.0 && hi > 0.0, std::max(lo, -hi)};
  }

  const Matrix y = x / d_n;

  // l1 distance from the origin to the hull; its dual is the separation LP
  //   max delta  s.t.  u'Y_i >= delta,  -1 <= u_j <= 1.
  {
    Matrix a = Matrix::Zero(p + 1, n + 2 * p);
    a.topLeftCorner(p, n) = y.transpose();
    a.block(p, 0, 1, n).setOnes();
    a.block(0, n, p, p) = -Matrix::Identity(p, p);
    a.block(0, n + p, p, p) = Matrix::Identity(p, p);
    Vector b = Vector::Zero(p + 1);
    b(p) = 1.0;
    Vector c = Vector::Zero(n + 2 * p);
    c.tail(2 * p).setOnes();
    const lp::LpResult res = lp::solve_standard_form(a, b, c);
    if (res.status != lp::LpStatus::Optimal) {
      throw Error(ErrorKind::SingularSystem, "hull separation LP did not reach an optimum");
    }
    if (res.value > 1e-10) {
      const Vector u = -res.duals.head(p);
      double margin = res.value * d_n / std::sqrt(static_cast<double>(p));
      const double un = u.norm();
      if (un > 0.0) margin = std::max(margin, (x * u).minCoeff() / un);
      return {false, margin};
    }
  }

  // Origin lies in the closed hull. It is interior iff the points span R^p
  // and admit strictly positive weights w with sum w_i Y_i = 0.
  Matrix a(p + 1, n + 1);
  a.col(0).head(p) = y.colwise().sum().transpose();
  a(p, 0) = static_cast<double>(n);
  a.topRightCorner(p, n) = y.transpose();
  a.block(p, 1, 1, n).setOnes();
  Vector b = Vector::Zero(p + 1);
  b(p) = 1.0;
  Vector c = Vector::Zero(n + 1);
  c(0) = -1.0;
  const lp::LpResult res = lp::solve_standard_form(a, b, c);
  const double s = res.status == lp::LpStatus::Optimal ? -res.value : 0.0;
  const Matrix v = y.transpose() * y;
  if (s <= 1e-13 || symmetric_rank(v) < static_cast<std::size_t>(p)) return {false, 0.0};

  Eigen::SelfAdjointEigenSolver<Matrix> es(v, Eigen::EigenvaluesOnly);
  const double min_eig = std::max(es.eigenvalues()(0), 0.0);
  const double bound = d_n * std::sqrt(min_eig) / (static_cast<double>(n) + 1.0 / s);
  return {true, -bound};
}

double dual_objective(const PointSet& ps, const Vector& lambda) {
  const Vector r = (ps.points() * lambda).array() + 1.0;
  return objective_from_residuals(ps, r);
}

Vector dual_gradient(const PointSet& ps, const Vector& lambda) {
  const Vector r = (ps.points() * lambda).array() + 1.0;
  const Vector coef = 2.0 * ps.weights().cwiseQuotient(r);
  return ps.points().transpose() * coef;
}

ELSolution solve_dual(const PointSet& ps, const SolveOptions& opts) {
  const Matrix& x = ps.points();
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Vector tau = ps.weights();
  const double total = ps.total_weight();
  const double d_n = ps.max_norm();
  const double grad_scale = total * std::max(1.0, d_n);

  ELSolution sol;
  sol.lambda_hat = Vector::Zero(p);

  if (d_n == 0.0) {
    // Every constraint is vacuous: EL = 1.
    sol.weights = tau / total;
    return sol;
  }
  if (n == 1) {
    sol.status = SolveStatus::HullViolation;
    sol.t_n = kInf;
    return sol;
  }

  const Vector floor = feasibility_floor(ps);

  Vector lambda = Vector::Zero(p);
  if (opts.initial) {
    if (opts.initial->size() != p) {
      throw Error(ErrorKind::DimensionMismatch, "initial multiplier has wrong dimension");
    }
    lambda = *opts.initial;
  } else if (auto quad = try_quadratic_stat(ps)) {
    lambda = quad->lambda_star;
  }
  {
    // Pull the warm start back toward zero until it is feasible and no worse than G(0) = 0.
    int k = 0;
    for (; k < 60; ++k) {
      const Vector r = (x * lambda).array() + 1.0;
      if (feasible(r, floor) && objective_from_residuals(ps, r) >= 0.0) break;
      lambda *= 0.5;
    }
    if (k == 60) lambda.setZero();
  }

  Vector r = (x * lambda).array() + 1.0;
  double g_val = objective_from_residuals(ps, r);
  for (int iter = 0;; ++iter) {
    const Vector inv_r = r.cwiseInverse();
    const Vector grad = 2.0 * (x.transpose() * tau.cwiseProduct(inv_r));
    sol.iterations = iter;
    sol.grad_norm = grad.cwiseAbs().maxCoeff() / grad_scale;
    if (sol.grad_norm <= opts.grad_tol) break;
    if (iter >= opts.max_iterations) {
      sol.status = SolveStatus::MaxIterations;
      break;
    }

    const Vector h = 2.0 * tau.cwiseProduct(inv_r.cwiseAbs2());
    const Matrix info = x.transpose() * h.asDiagonal() * x;
    Eigen::LDLT<Matrix> ldlt(info);
    const Vector piv = ldlt.vectorD();
    const double top = piv.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(top > 0.0) || piv.minCoeff() <= 1e-13 * top) {
      sol.status = SolveStatus::SingularSystem;
      break;
    }
    const Vector step = ldlt.solve(grad);
    const double decrement = grad.dot(step);

    bool accepted = false;
    double t = 1.0;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vector cand = lambda + t * step;
      const Vector rc = (x * cand).array() + 1.0;
      if (!feasible(rc, floor)) continue;
      const double gc = objective_from_residuals(ps, rc);
      // Near the optimum G is flat to rounding; judge ties by the gradient instead.
      const bool tie = gc >= g_val - 1e-15 * std::max(1.0, std::abs(g_val)) &&
                       (x.transpose() * tau.cwiseQuotient(rc)).cwiseAbs().maxCoeff() <
                           0.5 * grad.cwiseAbs().maxCoeff();
      if (gc > g_val || tie) {
        lambda = cand;
        r = rc;
        g_val = gc;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No representable ascent left: stationary to working precision.
      if (decrement <= 1e-12 * std::max(1.0, std::abs(g_val))) break;
      sol.status = SolveStatus::MaxIterations;
      break;
    }
    if (lambda.norm() * d_n > opts.divergence_factor * static_cast<double>(p)) {
      sol.status = SolveStatus::HullViolation;
      break;
    }
  }

  sol.lambda_hat = lambda;
  if (sol.status == SolveStatus::Converged) {
    sol.t_n = std::max(0.0, g_val);
    sol.weights = tau.cwiseQuotient(r) / total;
  } else if (sol.status == SolveStatus::HullViolation) {
    sol.t_n = kInf;
  } else {
    sol.t_n = std::numeric_limits<double>::quiet_NaN();
  }
  return sol;
}

std::optional<QuadApprox> try_quadratic_stat(const PointSet& ps) {
  const Vector tau = ps.weights();
  QuadApprox q;
  q.u_n = ps.points().transpose() * tau;
  q.v_n = ps.points().transpose() * tau.asDiagonal() * ps.points();
  if (symmetric_rank(q.v_n) < ps.p()) return std::nullopt;
  q.lambda_star = q.v_n.ldlt().solve(q.u_n);
  q.t_star = std::max(0.0, q.u_n.dot(q.lambda_star));
  return q;
}

QuadApprox quadratic_stat(const PointSet& ps) {
  if (auto q = try_quadratic_stat(ps)) return *std::move(q);
  const Matrix v = ps.points().transpose() * ps.weights().asDiagonal() * ps.points();
  throw Error(ErrorKind::SingularSystem, "V_n is singular (rank " + std::to_string(symmetric_rank(v)) +
                                             " < p = " + std::to_string(ps.p()) + ")");
}

}  // namespace elplug
