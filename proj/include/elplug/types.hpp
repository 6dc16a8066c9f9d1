#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace elplug {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raw sample: n observations of dimension d, one per row.
class Observations {
 public:
  Observations() = default;
  explicit Observations(RowMatrix values);
  Observations(std::size_t n, std::size_t d);

  /// Single-column sample.
  static Observations from_column(std::span<const double> values);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  bool empty() const noexcept { return values_.rows() == 0; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim(), dim()};
  }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  double& operator()(std::size_t i, std::size_t j) { return values_(i, j); }

  std::vector<double> column(std::size_t j) const;
  Observations subset(std::span<const std::size_t> indices) const;

  const RowMatrix& values() const noexcept { return values_; }

 private:
  RowMatrix values_;
};

}  // namespace elplug
