#include "elplug/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace elplug::lp {

namespace {

constexpr double kCostTol = 1e-11;
constexpr double kPivotTol = 1e-10;

class Tableau {
 public:
  Tableau(const Matrix& a, const Vector& b)
      : m_(a.rows()), n_(a.cols()), t_(a.rows(), a.cols() + a.rows() + 1), basis_(a.rows()),
        sign_(a.rows()) {
    t_.setZero();
    for (Eigen::Index i = 0; i < m_; ++i) {
      sign_[i] = b(i) < 0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign_[i] * a.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs()) = sign_[i] * b(i);
      basis_[i] = n_ + i;
    }
  }

  Eigen::Index rhs() const { return n_ + m_; }

  // Reduced costs for the given column costs (artificials carry cost `art`).
  void price(const Vector& c, double art) {
    cost_ = Vector::Zero(n_ + m_);
    cost_.head(n_) = c;
    cost_.tail(m_).setConstant(art);
    reduced_ = cost_;
    objective_ = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost_(basis_[i]);
      if (cb == 0.0) continue;
      reduced_ -= cb * t_.row(i).head(n_ + m_).transpose();
      objective_ += cb * t_(i, rhs());
    }
  }

  // Returns false when unbounded or out of iterations.
  LpStatus run(Eigen::Index allowed_cols) {
    const long limit = 50L * static_cast<long>(m_ + n_) + 1000;
    long degenerate_run = 0;
    for (long iter = 0; iter < limit; ++iter) {
      const bool bland = degenerate_run > 200;
      Eigen::Index enter = -1;
      double best = -kCostTol;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        if (reduced_(j) < best) {
          enter = j;
          if (bland) break;
          best = reduced_(j);
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      Eigen::Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double aij = t_(i, enter);
        if (aij <= kPivotTol) continue;
        const double r = t_(i, rhs()) / aij;
        if (r < ratio - 1e-14 || (r <= ratio + 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
          ratio = r;
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
    return LpStatus::IterationLimit;
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    const double rc = reduced_(col);
    if (rc != 0.0) {
      reduced_ -= rc * t_.row(row).head(n_ + m_).transpose();
      objective_ += rc * t_(row, rhs());
    }
    basis_[row] = col;
  }

  // Pivots remaining zero-level artificials out of the basis where possible.
  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > 1e-9) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  double objective() const { return objective_; }

  Vector primal() const {
    Vector x = Vector::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) x(basis_[i]) = t_(i, rhs());
    }
    return x;
  }

  Vector duals() const {
    Vector y = Vector::Zero(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost_(basis_[i]);
      if (cb != 0.0) y += cb * t_.row(i).segment(n_, m_).transpose();
    }
    for (Eigen::Index k = 0; k < m_; ++k) y(k) *= sign_[k];
    return y;
  }

  Eigen::Index cols() const { return n_; }

 private:
  Eigen::Index m_;
  Eigen::Index n_;
  Matrix t_;
  std::vector<Eigen::Index> basis_;
  std::vector<double> sign_;
  Vector cost_;
  Vector reduced_;
  double objective_ = 0.0;
};

}  // namespace

LpResult solve_standard_form(const Matrix& a, const Vector& b, const Vector& c) {
  LpResult result;
  Tableau tab(a, b);

  tab.price(Vector::Zero(a.cols()), 1.0);
  const LpStatus phase1 = tab.run(a.cols());
  if (phase1 == LpStatus::IterationLimit) {
    result.status = phase1;
    return result;
  }
  const double scale = 1.0 + b.cwiseAbs().maxCoeff();
  if (tab.objective() > 1e-9 * scale) {
    result.status = LpStatus::Infeasible;
    return result;
  }
  tab.drive_out_artificials();

  tab.price(c, 0.0);
  result.status = tab.run(a.cols());
  result.value = tab.objective();
  result.x = tab.primal();
  result.duals = tab.duals();
  return result;
}

}  // namespace elplug::lp
