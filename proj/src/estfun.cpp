#include "elplug/estfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "elplug/error.hpp"

namespace elplug {

namespace {

std::vector<std::string> numbered(const std::string& stem, std::size_t p) {
  std::vector<std::string> out;
  for (std::size_t j = 1; j <= p; ++j) out.push_back(stem + std::to_string(j));
  return out;
}

void require_fitted(bool fitted, const std::string& family) {
  if (!fitted) throw Error(ErrorKind::PluginNotFitted, family + ": plug-in estimators have not been fitted");
}

int as_flag(double v, const char* what) {
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be 0 or 1");
}

double rule_bandwidth(const std::optional<double>& absolute, double b0, double n, double alpha) {
  const double b = absolute ? *absolute : b0 * std::pow(n, -alpha);
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw Error(ErrorKind::NonpositiveBandwidth, "bandwidth rule gave " + std::to_string(b));
  }
  return b;
}

std::string describe_bandwidth(const Kernel& k, double b) {
  std::ostringstream os;
  os << "kernel=" << k.name() << " b=" << b;
  return os.str();
}

// ---------------------------------------------------------------------------

class MeanFamily final : public EstimatingFamily {
 public:
  explicit MeanFamily(std::size_t p) : p_(p) {
    if (p == 0) throw Error(ErrorKind::InvalidArgument, "mean family needs p >= 1");
  }
  std::string name() const override { return "mean"; }
  std::size_t dim() const override { return p_; }
  std::size_t theta_dim() const override { return p_; }
  std::size_t obs_dim() const override { return p_; }
  std::vector<std::string> columns() const override { return p_ == 1 ? std::vector<std::string>{"z"} : numbered("z", p_); }
  void fit(const Observations& data) override { check_data(data); }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    return Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size())) - theta;
  }
  std::optional<Matrix> offsets(const Observations& data) const override { return Matrix(data.values()); }
  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<MeanFamily>(*this); }

 private:
  std::size_t p_;
};

// ---------------------------------------------------------------------------

class SymmetricCdfFamily final : public EstimatingFamily {
 public:
  explicit SymmetricCdfFamily(double x) : x_(x) {}
  std::string name() const override { return "sym-cdf"; }
  std::size_t dim() const override { return 2; }
  std::size_t theta_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  std::vector<std::string> columns() const override { return {"x"}; }

  void fit(const Observations& data) override {
    check_data(data);
    const auto col = data.column(0);
    a_hat_ = sample_quantile(col, 0.5);
    fit_n_ = col.size();
    const double sd = sample_sd(col);
    kde_.reset();
    if (sd > 0.0) {
      // Normal-reference bandwidth for the Gaussian kernel.
      kde_.emplace(col, Kernel(KernelType::Gaussian), 1.06 * sd * std::pow(static_cast<double>(col.size()), -0.2));
    }
  }
  bool fitted() const override { return fit_n_ > 0; }
  PluginSet plugins() const override {
    PluginSet set{{"median", fit_n_, "a=" + std::to_string(a_hat_)}};
    if (kde_) set.push_back({"density", fit_n_, describe_bandwidth(kde_->kernel(), kde_->bandwidth())});
    return set;
  }
  double median() const { return a_hat_; }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    require_fitted(fitted(), name());
    Vector m(2);
    m(0) = (obs[0] <= x_ ? 1.0 : 0.0) - theta(0);
    m(1) = (obs[0] > 2.0 * a_hat_ - x_ ? 1.0 : 0.0) - theta(0);
    return m;
  }
  std::optional<Matrix> offsets(const Observations& data) const override {
    require_fitted(fitted(), name());
    Matrix g(static_cast<Eigen::Index>(data.size()), 2);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double v = data(i, 0);
      g(static_cast<Eigen::Index>(i), 0) = v <= x_ ? 1.0 : 0.0;
      g(static_cast<Eigen::Index>(i), 1) = v > 2.0 * a_hat_ - x_ ? 1.0 : 0.0;
    }
    return g;
  }
  Matrix theta_jacobian() const override { return Matrix::Ones(2, 1); }

  std::optional<Vector> point_estimate(const Observations& data) const override {
    check_data(data);
    const auto col = data.column(0);
    return Vector::Constant(1, fit_ecdf(col)(x_));
  }

  std::optional<Matrix> v2_formula(const Vector& theta_hat) const override {
    const double th = theta_hat(0);
    if (std::abs(th - 0.5) < 1e-6) throw Error(ErrorKind::SingularV2, "V2 is singular at theta = 1/2");
    const double eta = std::min(th, 1.0 - th);
    Matrix v(2, 2);
    v << th * (1.0 - th), -eta * eta, -eta * eta, th * (1.0 - th);
    return v;
  }

  std::optional<Matrix> v1_hat(const Observations& /*data*/, const Vector& theta_hat) const override {
    require_fitted(fitted(), name());
    if (!kde_) throw Error(ErrorKind::NonpositiveBandwidth, "sym-cdf: sample has zero spread, no density estimate");
    const double th = theta_hat(0);
    const double eta = std::min(th, 1.0 - th);
    const double fa = (*kde_)(a_hat_);
    if (!(fa > 0.0)) throw Error(ErrorKind::DensityFloorViolated, "sym-cdf: density estimate at the median is 0");
    const double r = (*kde_)(x_) / fa;
    const double v = th * (1.0 - th);
    Matrix m(2, 2);
    // Median linearization a-hat - a = (1/2 - F_n(a)) / f(a) fixes the sign of the r terms.
    const double off = -eta * eta + r * eta;
    m << v, off, off, v + r * r - 2.0 * r * eta;
    return m;
  }

  std::optional<LimitLaw> limit_law(const Observations& data) const override {
    const Vector th = *point_estimate(data);
    return WeightedChiSquare{eigen_weights(*v1_hat(data, th), *v2_formula(th))};
  }

  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<SymmetricCdfFamily>(*this); }

 private:
  double x_;
  double a_hat_ = 0.0;
  std::size_t fit_n_ = 0;
  std::optional<KernelDensity> kde_;
};

// ---------------------------------------------------------------------------

class SquaredDensityFamily final : public EstimatingFamily {
 public:
  explicit SquaredDensityFamily(const FamilyOptions& opts)
      : alpha_(opts.alpha.value_or(1.0 / 3.0)), b0_(opts.b0), bandwidth_(opts.bandwidth),
        kernel_(opts.kernel.value_or(KernelType::Gaussian)) {
    if (!(alpha_ > 0.25 && alpha_ < 0.5)) {
      throw Error(ErrorKind::BandwidthOutOfRange, "sq-density: alpha must lie in (1/4, 1/2), got " + std::to_string(alpha_));
    }
  }
  std::string name() const override { return "sq-density"; }
  std::size_t dim() const override { return 1; }
  std::size_t theta_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  std::vector<std::string> columns() const override { return {"x"}; }

  void fit(const Observations& data) override {
    check_data(data);
    const auto col = data.column(0);
    const double n = static_cast<double>(col.size());
    const double b = rule_bandwidth(bandwidth_, b0_ ? *b0_ : sample_sd(col), n, alpha_);
    kde_.emplace(col, kernel_, b);
  }
  bool fitted() const override { return kde_.has_value(); }
  PluginSet plugins() const override {
    if (!kde_) return {};
    return {{"density", kde_->fit_size(), describe_bandwidth(kernel_, kde_->bandwidth())}};
  }
  double bandwidth() const { return kde_ ? kde_->bandwidth() : 0.0; }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    require_fitted(fitted(), name());
    return Vector::Constant(1, (*kde_)(obs[0]) - theta(0));
  }
  std::optional<Matrix> offsets(const Observations& data) const override {
    require_fitted(fitted(), name());
    Matrix g(static_cast<Eigen::Index>(data.size()), 1);
    for (std::size_t i = 0; i < data.size(); ++i) g(static_cast<Eigen::Index>(i), 0) = (*kde_)(data(i, 0));
    return g;
  }
  std::optional<LimitLaw> limit_law(const Observations&) const override { return ScaledChiSquare{4.0, 1}; }
  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<SquaredDensityFamily>(*this); }

 private:
  double alpha_;
  std::optional<double> b0_;
  std::optional<double> bandwidth_;
  Kernel kernel_;
  std::optional<KernelDensity> kde_;
};

// ---------------------------------------------------------------------------

class SurvivalFunctionalFamily final : public EstimatingFamily {
 public:
  SurvivalFunctionalFamily(std::function<double(double)> xi, std::string xi_name)
      : xi_(std::move(xi)), xi_name_(std::move(xi_name)) {
    if (!xi_) throw Error(ErrorKind::InvalidArgument, "surv-functional needs a weight function");
  }
  std::string name() const override { return "surv-functional"; }
  std::size_t dim() const override { return 1; }
  std::size_t theta_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 2; }
  std::vector<std::string> columns() const override { return {"time", "delta"}; }

  void fit(const Observations& data) override {
    check_data(data);
    const auto times = data.column(0);
    std::vector<int> censored(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) censored[i] = 1 - as_flag(data(i, 1), "delta");
    g_ = fit_km(times, censored, TieOrder::UnflaggedFirst);
    fit_n_ = data.size();
  }
  bool fitted() const override { return fit_n_ > 0; }
  PluginSet plugins() const override {
    if (!fitted()) return {};
    return {{"censoring-km", fit_n_, "ties=events-first"}};
  }
  const StepFunction& censoring_cdf() const { return g_; }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    return Vector::Constant(1, ipcw(obs[0], obs[1]) - theta(0));
  }
  std::optional<Matrix> offsets(const Observations& data) const override {
    Matrix g(static_cast<Eigen::Index>(data.size()), 1);
    for (std::size_t i = 0; i < data.size(); ++i) g(static_cast<Eigen::Index>(i), 0) = ipcw(data(i, 0), data(i, 1));
    return g;
  }

  std::optional<Matrix> v1_hat(const Observations& data, const Vector& /*theta_hat*/) const override {
    check_data(data);
    const std::size_t n = data.size();
    if (n < 3) throw Error(ErrorKind::EmptySample, "surv-functional: jackknife needs n >= 3");
    std::vector<double> loo(n);
    std::vector<std::size_t> keep(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0, k = 0; j < n; ++j) {
        if (j != i) keep[k++] = j;
      }
      const Observations sub = data.subset(keep);
      SurvivalFunctionalFamily fam(xi_, xi_name_);
      fam.fit(sub);
      loo[i] = fam.offsets(sub)->mean();
    }
    const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    return Matrix::Constant(1, 1, static_cast<double>(n - 1) * ss);
  }

  std::optional<LimitLaw> limit_law(const Observations& data) const override {
    const Vector th = *point_estimate(data);
    const Matrix m = *offsets(data);
    const double v2 = (m.array() - th(0)).square().mean();
    if (!(v2 > 0.0)) throw Error(ErrorKind::SingularV2, "surv-functional: V2 estimate is zero");
    return WeightedChiSquare{{(*v1_hat(data, th))(0, 0) / v2}};
  }

  std::unique_ptr<EstimatingFamily> clone() const override {
    return std::make_unique<SurvivalFunctionalFamily>(*this);
  }

 private:
  double ipcw(double z, double delta) const {
    require_fitted(fitted(), name());
    if (as_flag(delta, "delta") == 0) return 0.0;
    const double surv = 1.0 - g_.left_limit(z);
    if (surv < 1e-12) {
      throw Error(ErrorKind::DivisionByZeroRisk,
                  "surv-functional: censoring survival is " + std::to_string(surv) + " at uncensored time " + std::to_string(z));
    }
    return xi_(z) / surv;
  }

  std::function<double(double)> xi_;
  std::string xi_name_;
  StepFunction g_;
  std::size_t fit_n_ = 0;
};

// ---------------------------------------------------------------------------

class RegressionErrorFamily final : public EstimatingFamily {
 public:
  RegressionErrorFamily(double z, const FamilyOptions& opts)
      : z_(z), b0_(opts.b0), bandwidth_(opts.bandwidth), kernel_(opts.kernel.value_or(KernelType::Epanechnikov)) {}
  std::string name() const override { return "reg-error"; }
  std::size_t dim() const override { return 1; }
  std::size_t theta_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 2; }
  std::vector<std::string> columns() const override { return {"x", "y"}; }

  void fit(const Observations& data) override {
    check_data(data);
    const auto x = data.column(0);
    const auto y = data.column(1);
    const double b = rule_bandwidth(bandwidth_, b0_ ? *b0_ : sample_sd(x), static_cast<double>(x.size()), 2.0 / 7.0);
    nw_.emplace(x, y, kernel_, b);
  }
  bool fitted() const override { return nw_.has_value(); }
  PluginSet plugins() const override {
    if (!nw_) return {};
    return {{"regression", nw_->fit_size(), describe_bandwidth(kernel_, nw_->bandwidth())}};
  }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    return Vector::Constant(1, indicator(obs[0], obs[1]) - theta(0));
  }
  std::optional<Matrix> offsets(const Observations& data) const override {
    Matrix g(static_cast<Eigen::Index>(data.size()), 1);
    for (std::size_t i = 0; i < data.size(); ++i) g(static_cast<Eigen::Index>(i), 0) = indicator(data(i, 0), data(i, 1));
    return g;
  }
  std::optional<Matrix> v2_formula(const Vector& theta_hat) const override {
    const double th = theta_hat(0);
    if (!(th > 0.0 && th < 1.0)) {
      throw Error(ErrorKind::ThetaOutOfRange, "reg-error: theta-hat must lie in (0, 1), got " + std::to_string(th));
    }
    return Matrix::Constant(1, 1, th * (1.0 - th));
  }
  std::optional<LimitLaw> limit_law(const Observations&) const override { return std::nullopt; }
  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<RegressionErrorFamily>(*this); }

 private:
  double indicator(double x, double y) const {
    require_fitted(fitted(), name());
    const auto mu = (*nw_)(x);
    if (!mu) {
      throw Error(ErrorKind::EmptyWindow, "reg-error: regression estimate undefined at x = " + std::to_string(x));
    }
    return y - *mu <= z_ ? 1.0 : 0.0;
  }

  double z_;
  std::optional<double> b0_;
  std::optional<double> bandwidth_;
  Kernel kernel_;
  std::optional<NadarayaWatson> nw_;
};

// ---------------------------------------------------------------------------

class DensityPointFamily final : public EstimatingFamily {
 public:
  DensityPointFamily(double t, const FamilyOptions& opts)
      : t_(t), b0_(opts.b0.value_or(1.0)), bandwidth_(opts.bandwidth),
        kernel_(opts.kernel.value_or(KernelType::Epanechnikov)) {
    if (!kernel_.compact()) throw Error(ErrorKind::InvalidArgument, "density-point needs a compactly supported kernel");
  }
  std::string name() const override { return "density-point"; }
  std::size_t dim() const override { return 1; }
  std::size_t theta_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  std::vector<std::string> columns() const override { return {"x"}; }

  double scale(std::size_t n) const override {
    require_fitted(fitted(), name());
    return std::sqrt(b_ / static_cast<double>(n));
  }
  bool root_n() const override { return false; }

  void fit(const Observations& data) override {
    check_data(data);
    b_ = rule_bandwidth(bandwidth_, b0_, static_cast<double>(data.size()), 1.0 / 3.0);
    fit_n_ = data.size();
  }
  bool fitted() const override { return fit_n_ > 0; }
  PluginSet plugins() const override {
    if (!fitted()) return {};
    return {{"bandwidth", fit_n_, describe_bandwidth(kernel_, b_)}};
  }
  double bandwidth() const { return b_; }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    require_fitted(fitted(), name());
    return Vector::Constant(1, kernel_((obs[0] - t_) / b_) / b_ - theta(0));
  }
  std::optional<Matrix> offsets(const Observations& data) const override {
    require_fitted(fitted(), name());
    Matrix g(static_cast<Eigen::Index>(data.size()), 1);
    for (std::size_t i = 0; i < data.size(); ++i) g(static_cast<Eigen::Index>(i), 0) = kernel_((data(i, 0) - t_) / b_) / b_;
    return g;
  }
  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<DensityPointFamily>(*this); }

 private:
  double t_;
  double b0_;
  std::optional<double> bandwidth_;
  Kernel kernel_;
  double b_ = 0.0;
  std::size_t fit_n_ = 0;
};

// ---------------------------------------------------------------------------

class CurrentStatusFamily final : public EstimatingFamily {
 public:
  CurrentStatusFamily(double t, const FamilyOptions& opts)
      : t_(t), b0_(opts.b0.value_or(1.0)), bandwidth_(opts.bandwidth),
        kernel_(opts.kernel.value_or(KernelType::Epanechnikov)), floor_(opts.density_floor) {
    if (!kernel_.compact()) throw Error(ErrorKind::InvalidArgument, "current-status needs a compactly supported kernel");
    if (!(floor_ > 0.0)) throw Error(ErrorKind::InvalidArgument, "current-status density floor must be positive");
  }
  std::string name() const override { return "current-status"; }
  std::size_t dim() const override { return 1; }
  std::size_t theta_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 2; }
  std::vector<std::string> columns() const override { return {"c", "delta"}; }

  double scale(std::size_t n) const override { return std::pow(static_cast<double>(n), -2.0 / 3.0); }
  bool root_n() const override { return false; }

  void fit(const Observations& data) override {
    check_data(data);
    const auto c = data.column(0);
    std::vector<int> delta(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) delta[i] = as_flag(data(i, 1), "delta");
    const double n = static_cast<double>(data.size());
    f_hat_ = fit_pava_npmle(c, delta);
    g_hat_.emplace(c, kernel_, rule_bandwidth(std::nullopt, sample_sd(c), n, 0.2));
    b_ = rule_bandwidth(bandwidth_, b0_, n, 1.0 / 3.0);
    integral_ = kernel_survival_integral();
    fit_n_ = data.size();
  }
  bool fitted() const override { return fit_n_ > 0; }
  PluginSet plugins() const override {
    if (!fitted()) return {};
    return {{"npmle", fit_n_, "pava"},
            {"check-density", fit_n_, describe_bandwidth(kernel_, g_hat_->bandwidth())},
            {"kernel", fit_n_, describe_bandwidth(kernel_, b_)}};
  }
  double bandwidth() const { return b_; }
  double integral() const { return integral_; }
  const StepFunction& npmle() const { return f_hat_; }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    return Vector::Constant(1, offset(obs[0], obs[1]) - theta(0));
  }
  std::optional<Matrix> offsets(const Observations& data) const override {
    Matrix g(static_cast<Eigen::Index>(data.size()), 1);
    for (std::size_t i = 0; i < data.size(); ++i) g(static_cast<Eigen::Index>(i), 0) = offset(data(i, 0), data(i, 1));
    return g;
  }
  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<CurrentStatusFamily>(*this); }

 private:
  double kn(double u) const { return kernel_((u - t_) / b_) / b_; }

  // Integral over [0, inf) of k_n(u) (1 - F-hat(u)), exact on each step of F-hat.
  double kernel_survival_integral() const {
    const auto& loc = f_hat_.locations();
    const auto& val = f_hat_.values();
    auto mass = [&](double lo, double hi) {
      lo = std::max(lo, 0.0);
      if (!(hi > lo)) return 0.0;
      return kernel_.cdf((hi - t_) / b_) - kernel_.cdf((lo - t_) / b_);
    };
    const double inf = std::numeric_limits<double>::infinity();
    double s = (1.0 - f_hat_.initial()) * mass(0.0, loc.empty() ? inf : loc.front());
    for (std::size_t j = 0; j < loc.size(); ++j) {
      s += (1.0 - val[j]) * mass(loc[j], j + 1 < loc.size() ? loc[j + 1] : inf);
    }
    return s;
  }

  double offset(double c, double delta) const {
    require_fitted(fitted(), name());
    const int d = as_flag(delta, "delta");
    const double k = kn(c);
    if (k == 0.0) return integral_;
    const double g = (*g_hat_)(c);
    if (g < floor_) {
      throw Error(ErrorKind::DensityFloorViolated, "current-status: check-time density " + std::to_string(g) +
                                                       " below floor at c = " + std::to_string(c));
    }
    return k * (1.0 - d) / g - k * (1.0 - f_hat_(c)) / g + integral_;
  }

  double t_;
  double b0_;
  std::optional<double> bandwidth_;
  Kernel kernel_;
  double floor_;
  StepFunction f_hat_;
  std::optional<KernelDensity> g_hat_;
  double b_ = 0.0;
  double integral_ = 0.0;
  std::size_t fit_n_ = 0;
};

// ---------------------------------------------------------------------------

class PoissonRegressionFamily final : public EstimatingFamily {
 public:
  explicit PoissonRegressionFamily(std::size_t p) : p_(p) {
    if (p == 0) throw Error(ErrorKind::InvalidArgument, "poisson-reg needs p >= 1");
  }
  std::string name() const override { return "poisson-reg"; }
  std::size_t dim() const override { return p_; }
  std::size_t theta_dim() const override { return p_; }
  std::size_t obs_dim() const override { return p_ + 1; }
  std::vector<std::string> columns() const override {
    auto c = numbered("z", p_);
    c.push_back("y");
    return c;
  }
  void fit(const Observations& data) override { check_data(data); }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    const Eigen::Map<const Vector> z(obs.data(), static_cast<Eigen::Index>(p_));
    const double eta = z.dot(theta);
    if (eta > 700.0) throw Error(ErrorKind::Overflow, "poisson-reg: linear predictor " + std::to_string(eta) + " > 700");
    return (obs[p_] - std::exp(eta)) * z;
  }

  // Poisson maximum likelihood by damped Newton.
  std::optional<Vector> point_estimate(const Observations& data) const override {
    check_data(data);
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto p = static_cast<Eigen::Index>(p_);
    const Matrix z = data.values().leftCols(p);
    const Vector y = data.values().col(p);
    auto loglik = [&](const Vector& b) {
      const Vector eta = z * b;
      if (eta.maxCoeff() > 700.0) return -std::numeric_limits<double>::infinity();
      return (y.array() * eta.array() - eta.array().exp()).sum();
    };
    Vector beta = Vector::Zero(p);
    double ll = loglik(beta);
    for (int it = 0; it < 200; ++it) {
      const Vector mu = (z * beta).array().exp();
      const Vector grad = z.transpose() * (y - mu);
      if (grad.cwiseAbs().maxCoeff() <= 1e-10 * static_cast<double>(n)) return beta;
      const Matrix info = z.transpose() * mu.asDiagonal() * z;
      Eigen::LDLT<Matrix> ldlt(info);
      if (ldlt.info() != Eigen::Success) return std::nullopt;
      const Vector step = ldlt.solve(grad);
      double s = 1.0;
      bool moved = false;
      for (int k = 0; k < 50; ++k, s *= 0.5) {
        const Vector cand = beta + s * step;
        const double lc = loglik(cand);
        if (lc >= ll) {
          moved = lc > ll || k == 0;
          beta = cand;
          ll = lc;
          break;
        }
      }
      if (!moved) return beta;
    }
    return std::nullopt;
  }
  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<PoissonRegressionFamily>(*this); }

 private:
  std::size_t p_;
};

// ---------------------------------------------------------------------------

class OrthoSeriesFamily final : public EstimatingFamily {
 public:
  OrthoSeriesFamily(std::size_t p, std::string f0) : p_(p), f0_(std::move(f0)) {
    if (p == 0) throw Error(ErrorKind::InvalidArgument, "ortho-series needs p >= 1");
    reference_cdf(f0_, 0.0);
  }
  std::string name() const override { return "ortho-series"; }
  std::size_t dim() const override { return p_; }
  std::size_t theta_dim() const override { return p_; }
  std::size_t obs_dim() const override { return 1; }
  std::vector<std::string> columns() const override { return {"x"}; }
  void fit(const Observations& data) override { check_data(data); }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    return cosine_basis(reference_cdf(f0_, obs[0]), p_) - theta;
  }
  std::optional<Matrix> offsets(const Observations& data) const override {
    Matrix g(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(p_));
    for (std::size_t i = 0; i < data.size(); ++i) {
      g.row(static_cast<Eigen::Index>(i)) = cosine_basis(reference_cdf(f0_, data(i, 0)), p_).transpose();
    }
    return g;
  }
  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<OrthoSeriesFamily>(*this); }

 private:
  std::size_t p_;
  std::string f0_;
};

// ---------------------------------------------------------------------------

class PolyRegressionFamily final : public EstimatingFamily {
 public:
  PolyRegressionFamily(std::size_t p, std::vector<double> focus, std::string f0)
      : p_(p), focus_(std::move(focus)), f0_(std::move(f0)) {
    reference_cdf(f0_, 0.0);
    if (!focus_.empty()) {
      focus_map_.resize(static_cast<Eigen::Index>(focus_.size()), static_cast<Eigen::Index>(p_ + 1));
      for (std::size_t k = 0; k < focus_.size(); ++k) focus_map_.row(static_cast<Eigen::Index>(k)) = full_basis(focus_[k]).transpose();
    }
  }
  std::string name() const override { return "poly-reg"; }
  std::size_t dim() const override { return focus_.empty() ? p_ + 1 : focus_.size(); }
  std::size_t theta_dim() const override { return dim(); }
  std::size_t obs_dim() const override { return 2; }
  std::vector<std::string> columns() const override { return {"x", "y"}; }
  void fit(const Observations& data) override { check_data(data); }

  Vector evaluate(std::span<const double> obs, const Vector& theta) const override {
    check_obs(obs);
    check_theta(theta);
    return transformed(obs[0], obs[1]) - theta;
  }
  std::optional<Matrix> offsets(const Observations& data) const override {
    Matrix g(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < data.size(); ++i) g.row(static_cast<Eigen::Index>(i)) = transformed(data(i, 0), data(i, 1)).transpose();
    return g;
  }
  std::unique_ptr<EstimatingFamily> clone() const override { return std::make_unique<PolyRegressionFamily>(*this); }

 private:
  // (psi_0, ..., psi_p) with psi_0 = 1.
  Vector full_basis(double x) const {
    Vector psi(static_cast<Eigen::Index>(p_ + 1));
    psi(0) = 1.0;
    if (p_ > 0) psi.tail(static_cast<Eigen::Index>(p_)) = cosine_basis(reference_cdf(f0_, x), p_);
    return psi;
  }
  Vector transformed(double x, double y) const {
    const Vector z = y * full_basis(x);
    return focus_.empty() ? z : Vector(focus_map_ * z);
  }

  std::size_t p_;
  std::vector<double> focus_;
  std::string f0_;
  Matrix focus_map_;
};

std::function<double(double)> parse_xi(const std::string& spec) {
  if (spec == "identity") return [](double z) { return z; };
  const std::string prefix = "indicator:";
  if (spec.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double c = 0.0;
    try {
      c = std::stod(spec.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != spec.size() - prefix.size()) {
      throw Error(ErrorKind::InvalidArgument, "bad weight function '" + spec + "'");
    }
    return [c](double z) { return z <= c ? 1.0 : 0.0; };
  }
  throw Error(ErrorKind::InvalidArgument, "unknown weight function '" + spec + "' (identity | indicator:<c>)");
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix EstimatingFamily::theta_jacobian() const {
  return Matrix::Identity(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(theta_dim()));
}

Matrix EstimatingFamily::evaluate_all(const Observations& data, const Vector& theta) const {
  return Evaluator(*this, data).points(theta);
}

std::optional<Vector> EstimatingFamily::point_estimate(const Observations& data) const {
  check_data(data);
  const auto g = offsets(data);
  if (!g) return std::nullopt;
  const Matrix j = theta_jacobian();
  const Vector mean = g->colwise().mean().transpose();
  return Vector((j.transpose() * j).ldlt().solve(j.transpose() * mean));
}

void EstimatingFamily::check_obs(std::span<const double> obs) const {
  if (obs.size() != obs_dim()) {
    throw Error(ErrorKind::DimensionMismatch, name() + ": observation has " + std::to_string(obs.size()) +
                                                  " columns, expected " + std::to_string(obs_dim()));
  }
}

void EstimatingFamily::check_theta(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != theta_dim()) {
    throw Error(ErrorKind::DimensionMismatch, name() + ": parameter has dimension " + std::to_string(theta.size()) +
                                                  ", expected " + std::to_string(theta_dim()));
  }
}

void EstimatingFamily::check_data(const Observations& data) const {
  if (data.empty()) throw Error(ErrorKind::EmptySample, name() + ": no observations");
  if (data.dim() != obs_dim()) {
    throw Error(ErrorKind::DimensionMismatch, name() + ": data has " + std::to_string(data.dim()) +
                                                  " columns, expected " + std::to_string(obs_dim()));
  }
}

Evaluator::Evaluator(const EstimatingFamily& family, const Observations& data)
    : family_(&family), data_(&data) {
  if (data.empty()) throw Error(ErrorKind::EmptySample, family.name() + ": no observations");
  if (data.dim() != family.obs_dim()) {
    throw Error(ErrorKind::DimensionMismatch, family.name() + ": data has " + std::to_string(data.dim()) +
                                                  " columns, expected " + std::to_string(family.obs_dim()));
  }
  offsets_ = family.offsets(data);
  if (offsets_) jacobian_ = family.theta_jacobian();
  scale_ = family.scale(data.size());
}

Matrix Evaluator::points(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != family_->theta_dim()) {
    throw Error(ErrorKind::DimensionMismatch, family_->name() + ": parameter has dimension " +
                                                  std::to_string(theta.size()) + ", expected " +
                                                  std::to_string(family_->theta_dim()));
  }
  if (offsets_) {
    const Vector shift = jacobian_ * theta;
    return (offsets_->rowwise() - shift.transpose()) * scale_;
  }
  Matrix out(static_cast<Eigen::Index>(data_->size()), static_cast<Eigen::Index>(family_->dim()));
  for (std::size_t i = 0; i < data_->size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = family_->evaluate(data_->row(i), theta).transpose() * scale_;
  }
  return out;
}

std::unique_ptr<EstimatingFamily> mean_family(std::size_t p) { return std::make_unique<MeanFamily>(p); }
std::unique_ptr<EstimatingFamily> symmetric_cdf_family(double x) { return std::make_unique<SymmetricCdfFamily>(x); }
std::unique_ptr<EstimatingFamily> squared_density_family(const FamilyOptions& opts) {
  return std::make_unique<SquaredDensityFamily>(opts);
}
std::unique_ptr<EstimatingFamily> survival_functional_family(std::function<double(double)> xi, std::string xi_name) {
  return std::make_unique<SurvivalFunctionalFamily>(std::move(xi), std::move(xi_name));
}
std::unique_ptr<EstimatingFamily> regression_error_family(double z, const FamilyOptions& opts) {
  return std::make_unique<RegressionErrorFamily>(z, opts);
}
std::unique_ptr<EstimatingFamily> density_point_family(double t, const FamilyOptions& opts) {
  return std::make_unique<DensityPointFamily>(t, opts);
}
std::unique_ptr<EstimatingFamily> current_status_family(double t, const FamilyOptions& opts) {
  return std::make_unique<CurrentStatusFamily>(t, opts);
}
std::unique_ptr<EstimatingFamily> poisson_regression_family(std::size_t p) {
  return std::make_unique<PoissonRegressionFamily>(p);
}
std::unique_ptr<EstimatingFamily> orthoseries_family(std::size_t p, const std::string& f0) {
  return std::make_unique<OrthoSeriesFamily>(p, f0);
}
std::unique_ptr<EstimatingFamily> growing_polynomial_family(std::size_t p, std::vector<double> focus,
                                                            const std::string& f0) {
  return std::make_unique<PolyRegressionFamily>(p, std::move(focus), f0);
}

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names{"mean",          "sym-cdf",        "sq-density", "surv-functional",
                                              "reg-error",     "density-point",  "current-status",
                                              "poisson-reg",   "ortho-series",   "poly-reg"};
  return names;
}

std::unique_ptr<EstimatingFamily> make_family(const std::string& name, const FamilyOptions& opts) {
  if (name == "mean") return mean_family(opts.p);
  if (name == "sym-cdf") return symmetric_cdf_family(opts.x);
  if (name == "sq-density") return squared_density_family(opts);
  if (name == "surv-functional") return survival_functional_family(parse_xi(opts.xi), opts.xi);
  if (name == "reg-error") return regression_error_family(opts.z, opts);
  if (name == "density-point") return density_point_family(opts.t, opts);
  if (name == "current-status") return current_status_family(opts.t, opts);
  if (name == "poisson-reg") return poisson_regression_family(opts.p);
  if (name == "ortho-series") return orthoseries_family(opts.p, opts.f0);
  if (name == "poly-reg") return growing_polynomial_family(opts.p, opts.focus, opts.f0);
  throw Error(ErrorKind::UnknownFamily, "unknown family '" + name + "'");
}

Matrix poisson_sigma(const Vector& beta) {
  const auto p = beta.size();
  return std::exp(0.5 * beta.squaredNorm()) * (Matrix::Identity(p, p) + beta * beta.transpose());
}

Vector cosine_basis(double u, std::size_t p) {
  Vector psi(static_cast<Eigen::Index>(p));
  for (std::size_t j = 1; j <= p; ++j) {
    psi(static_cast<Eigen::Index>(j - 1)) = std::numbers::sqrt2 * std::cos(static_cast<double>(j) * std::numbers::pi * u);
  }
  return psi;
}

double reference_cdf(const std::string& f0, double x) {
  if (f0 == "uniform") return std::clamp(x, 0.0, 1.0);
  if (f0 == "normal") return 0.5 * std::erfc(-x / std::numbers::sqrt2);
  throw Error(ErrorKind::InvalidArgument, "unknown reference law '" + f0 + "' (uniform | normal)");
}

}  // namespace elplug
