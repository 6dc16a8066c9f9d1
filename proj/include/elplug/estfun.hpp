#pragma once

#include <cstddef>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elplug/limit_law.hpp"
#include "elplug/plugin.hpp"
#include "elplug/types.hpp"

namespace elplug {

/// Record of one fitted nuisance estimator.
struct PluginHandle {
  std::string name;
  std::size_t fit_n = 0;
  std::string config;
};

using PluginSet = std::vector<PluginHandle>;

/// Construction options for the registry. Fields a family does not use are ignored.
struct FamilyOptions {
  std::size_t p = 1;  // mean, poisson-reg, ortho-series (basis size), poly-reg (order)
  double x = 0.5;     // sym-cdf evaluation point
  double t = 0.0;     // density-point and current-status time point
  double z = 0.0;     // reg-error threshold
  std::optional<double> bandwidth;  // absolute bandwidth, overrides the rule
  std::optional<double> b0;         // constant in b = b0 * n^(-alpha)
  std::optional<double> alpha;      // sq-density exponent, must lie in (1/4, 1/2)
  std::optional<KernelType> kernel;
  double density_floor = 1e-3;   // current-status lower bound on g-hat
  std::string xi = "identity";   // surv-functional weight: identity | indicator:<c>
  std::string f0 = "uniform";    // basis reference law: uniform (on [0,1]) | normal
  std::vector<double> focus;     // poly-reg pointwise focus points
};

/// Plug-in estimating function m_n(X, theta, h) = scale(n) * m(X, theta, h-hat).
class EstimatingFamily {
 public:
  virtual ~EstimatingFamily() = default;

  virtual std::string name() const = 0;
  /// Output dimension p.
  virtual std::size_t dim() const = 0;
  virtual std::size_t theta_dim() const = 0;
  /// Columns expected per observation.
  virtual std::size_t obs_dim() const = 0;
  virtual std::vector<std::string> columns() const = 0;

  /// Multiplier taking raw m to m_n. Valid after fit for data-dependent scales.
  virtual double scale(std::size_t n) const { return 1.0 / std::sqrt(static_cast<double>(n)); }
  virtual double a_n(std::size_t /*n*/) const { return 1.0; }
  /// Eligible for the i.i.d. root-n bootstrap.
  virtual bool root_n() const { return true; }

  /// Fits the nuisance estimators on `data`.
  virtual void fit(const Observations& data) = 0;
  virtual bool fitted() const { return true; }
  virtual PluginSet plugins() const { return {}; }

  /// Raw m(obs, theta, h-hat). Throws PluginNotFitted before fit.
  virtual Vector evaluate(std::span<const double> obs, const Vector& theta) const = 0;

  /// For families with m = g(obs) - J theta: the n x p matrix of g values.
  virtual std::optional<Matrix> offsets(const Observations& /*data*/) const { return std::nullopt; }
  /// The constant J (p x theta_dim) paired with offsets().
  virtual Matrix theta_jacobian() const;

  /// Scaled points m_n(X_i, theta) as an n x p matrix.
  Matrix evaluate_all(const Observations& data, const Vector& theta) const;

  /// Solution of the estimating equation (least squares when p > theta_dim).
  virtual std::optional<Vector> point_estimate(const Observations& data) const;
  /// Reference law for -2 log EL / a_n; nullopt when only the bootstrap applies.
  virtual std::optional<LimitLaw> limit_law(const Observations& /*data*/) const {
    return ChiSquare{static_cast<int>(dim())};
  }
  /// Estimate of V1 in scaled units, where the family provides one.
  virtual std::optional<Matrix> v1_hat(const Observations& /*data*/, const Vector& /*theta_hat*/) const {
    return std::nullopt;
  }
  /// Closed-form V2 at theta-hat, where the family provides one.
  virtual std::optional<Matrix> v2_formula(const Vector& /*theta_hat*/) const { return std::nullopt; }

  /// Copy including configuration and any fitted state.
  virtual std::unique_ptr<EstimatingFamily> clone() const = 0;

 protected:
  void check_obs(std::span<const double> obs) const;
  void check_theta(const Vector& theta) const;
  void check_data(const Observations& data) const;
};

/// Caches the theta-free part of the evaluation for one dataset.
class Evaluator {
 public:
  Evaluator(const EstimatingFamily& family, const Observations& data);

  /// Scaled points at theta.
  Matrix points(const Vector& theta) const;
  const EstimatingFamily& family() const noexcept { return *family_; }
  const Observations& data() const noexcept { return *data_; }
  std::size_t n() const noexcept { return data_->size(); }

 private:
  const EstimatingFamily* family_;
  const Observations* data_;
  std::optional<Matrix> offsets_;
  Matrix jacobian_;
  double scale_;
};

std::unique_ptr<EstimatingFamily> mean_family(std::size_t p);
std::unique_ptr<EstimatingFamily> symmetric_cdf_family(double x);
std::unique_ptr<EstimatingFamily> squared_density_family(const FamilyOptions& opts = {});
std::unique_ptr<EstimatingFamily> survival_functional_family(std::function<double(double)> xi,
                                                             std::string xi_name = "identity");
std::unique_ptr<EstimatingFamily> regression_error_family(double z, const FamilyOptions& opts = {});
std::unique_ptr<EstimatingFamily> density_point_family(double t, const FamilyOptions& opts = {});
std::unique_ptr<EstimatingFamily> current_status_family(double t, const FamilyOptions& opts = {});
std::unique_ptr<EstimatingFamily> poisson_regression_family(std::size_t p);
std::unique_ptr<EstimatingFamily> orthoseries_family(std::size_t p, const std::string& f0 = "uniform");
std::unique_ptr<EstimatingFamily> growing_polynomial_family(std::size_t p, std::vector<double> focus = {},
                                                            const std::string& f0 = "uniform");

/// Registry by CLI name.
std::unique_ptr<EstimatingFamily> make_family(const std::string& name, const FamilyOptions& opts = {});
const std::vector<std::string>& family_names();

/// sigma_n(beta) = exp(|beta|^2 / 2) (I + beta beta') for standard normal covariates.
Matrix poisson_sigma(const Vector& beta);

/// Cosine basis sqrt(2) cos(j pi u), j = 1..p, at u in [0, 1].
Vector cosine_basis(double u, std::size_t p);
/// Maps x to u = F0(x) for the named reference law.
double reference_cdf(const std::string& f0, double x);

}  // namespace elplug
