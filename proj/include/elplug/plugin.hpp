#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elplug {

enum class KernelType { Epanechnikov, Gaussian };

/// Symmetric probability-density kernel k.
class Kernel {
 public:
  explicit Kernel(KernelType type = KernelType::Epanechnikov) : type_(type) {}

  KernelType type() const noexcept { return type_; }
  std::string_view name() const noexcept;
  double operator()(double u) const noexcept;
  /// Integral of k from -inf to u.
  double cdf(double u) const noexcept;
  /// R(k) = integral of k^2.
  double roughness() const noexcept;
  /// k(0), the maximum.
  double peak() const noexcept { return (*this)(0.0); }
  bool compact() const noexcept { return type_ == KernelType::Epanechnikov; }
  /// Half-width outside which k is zero (or below double resolution for the Gaussian).
  double reach() const noexcept { return compact() ? 1.0 : 8.5; }

 private:
  KernelType type_;
};

KernelType parse_kernel(std::string_view name);

/// Right-continuous step function: `initial` before the first location,
/// values[j] on [locations[j], locations[j+1]).
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> locations, std::vector<double> values, double initial);

  double operator()(double x) const noexcept;
  double left_limit(double x) const noexcept;

  const std::vector<double>& locations() const noexcept { return locations_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double initial() const noexcept { return initial_; }

  bool nondecreasing() const noexcept;
  bool nonincreasing() const noexcept;

 private:
  std::vector<double> locations_;
  std::vector<double> values_;
  double initial_ = 0.0;
};

StepFunction fit_ecdf(std::span<const double> sample);

/// Inverse-ECDF quantile; at q = 0.5 the middle order statistic, or the mean
/// of the two middle ones for even n.
double sample_quantile(std::span<const double> sample, double q);

double sample_sd(std::span<const double> sample);

class KernelDensity {
 public:
  KernelDensity(std::vector<double> sample, Kernel kernel, double bandwidth);

  double operator()(double x) const;
  std::vector<double> evaluate(std::span<const double> xs) const;

  double bandwidth() const noexcept { return bandwidth_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  std::size_t fit_size() const noexcept { return sample_.size(); }

 private:
  std::vector<double> sample_;  // sorted
  Kernel kernel_;
  double bandwidth_;
};

KernelDensity fit_kde(std::span<const double> sample, Kernel kernel, double bandwidth);

class NadarayaWatson {
 public:
  NadarayaWatson(std::vector<double> x, std::vector<double> y, Kernel kernel, double bandwidth);

  /// nullopt where every kernel weight vanishes.
  std::optional<double> operator()(double x) const;

  double bandwidth() const noexcept { return bandwidth_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  std::size_t fit_size() const noexcept { return x_.size(); }

 private:
  std::vector<double> x_;  // sorted, y_ permuted alongside
  std::vector<double> y_;
  Kernel kernel_;
  double bandwidth_;
};

NadarayaWatson fit_nw(std::span<const double> x, std::span<const double> y, Kernel kernel,
                      double bandwidth);

/// Which flag class leaves the risk set first when times tie.
enum class TieOrder {
  FlaggedFirst,    // usual KM for the flagged variable (others still at risk)
  UnflaggedFirst,  // KM of censoring: deaths at t leave before censorings at t
};

/// Product-limit estimate of the distribution function of the flagged
/// variable (flag = 1 marks an observed event).
StepFunction fit_km(std::span<const double> times, std::span<const int> flags,
                    TieOrder ties = TieOrder::FlaggedFirst);

/// Monotone least-squares fit of delta on check times; equal check times form
/// one block. Constant between check times, 0 before the first.
StepFunction fit_pava_npmle(std::span<const double> check_times, std::span<const int> delta);

}  // namespace elplug
