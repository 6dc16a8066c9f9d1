#include "elplug/plugin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "elplug/error.hpp"

namespace elplug {

namespace {

void require_sample(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::EmptySample, "sample is empty");
}

void require_bandwidth(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw Error(ErrorKind::NonpositiveBandwidth, "bandwidth must be positive, got " + std::to_string(b));
  }
}

std::vector<std::size_t> sorted_order(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

}  // namespace

std::string_view Kernel::name() const noexcept {
  return type_ == KernelType::Epanechnikov ? "epanechnikov" : "gaussian";
}

double Kernel::operator()(double u) const noexcept {
  if (type_ == KernelType::Epanechnikov) return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  return std::exp(-0.5 * u * u) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
}

double Kernel::cdf(double u) const noexcept {
  if (type_ == KernelType::Epanechnikov) {
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return 0.5 + 0.75 * (u - u * u * u / 3.0);
  }
  return 0.5 * std::erfc(-u / std::numbers::sqrt2);
}

double Kernel::roughness() const noexcept {
  return type_ == KernelType::Epanechnikov ? 0.6 : 0.5 * std::numbers::inv_sqrtpi;
}

KernelType parse_kernel(std::string_view name) {
  if (name == "epanechnikov") return KernelType::Epanechnikov;
  if (name == "gaussian") return KernelType::Gaussian;
  throw Error(ErrorKind::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

StepFunction::StepFunction(std::vector<double> locations, std::vector<double> values, double initial)
    : locations_(std::move(locations)), values_(std::move(values)), initial_(initial) {
  if (locations_.size() != values_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "step function needs one value per jump location");
  }
  for (std::size_t j = 1; j < locations_.size(); ++j) {
    if (!(locations_[j] > locations_[j - 1])) {
      throw Error(ErrorKind::InvalidArgument, "step locations must be strictly increasing");
    }
  }
}

double StepFunction::operator()(double x) const noexcept {
  auto it = std::upper_bound(locations_.begin(), locations_.end(), x);
  if (it == locations_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - locations_.begin()) - 1];
}

double StepFunction::left_limit(double x) const noexcept {
  auto it = std::lower_bound(locations_.begin(), locations_.end(), x);
  if (it == locations_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - locations_.begin()) - 1];
}

bool StepFunction::nondecreasing() const noexcept {
  double prev = initial_;
  for (double v : values_) {
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

bool StepFunction::nonincreasing() const noexcept {
  double prev = initial_;
  for (double v : values_) {
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

StepFunction fit_ecdf(std::span<const double> sample) {
  require_sample(sample.size());
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  std::vector<double> loc;
  std::vector<double> val;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;
    loc.push_back(xs[i]);
    val.push_back(static_cast<double>(i + 1) / n);
  }
  return StepFunction(std::move(loc), std::move(val), 0.0);
}

double sample_quantile(std::span<const double> sample, double q) {
  require_sample(sample.size());
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidArgument, "quantile level must lie in (0, 1)");
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double m = static_cast<double>(xs.size()) * q;
  const double fl = std::floor(m);
  const auto k = static_cast<std::size_t>(fl);
  if (m == fl && k >= 1 && k < xs.size()) return 0.5 * (xs[k - 1] + xs[k]);
  return xs[std::min(xs.size() - 1, static_cast<std::size_t>(std::ceil(m)) - 1)];
}

double sample_sd(std::span<const double> sample) {
  if (sample.size() < 2) return 0.0;
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(sample.size() - 1));
}

KernelDensity::KernelDensity(std::vector<double> sample, Kernel kernel, double bandwidth)
    : sample_(std::move(sample)), kernel_(kernel), bandwidth_(bandwidth) {
  require_sample(sample_.size());
  require_bandwidth(bandwidth_);
  std::sort(sample_.begin(), sample_.end());
}

double KernelDensity::operator()(double x) const {
  const double h = kernel_.reach() * bandwidth_;
  auto lo = std::lower_bound(sample_.begin(), sample_.end(), x - h);
  auto hi = std::upper_bound(lo, sample_.end(), x + h);
  double s = 0.0;
  for (auto it = lo; it != hi; ++it) s += kernel_((x - *it) / bandwidth_);
  return s / (static_cast<double>(sample_.size()) * bandwidth_);
}

std::vector<double> KernelDensity::evaluate(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (*this)(xs[i]);
  return out;
}

KernelDensity fit_kde(std::span<const double> sample, Kernel kernel, double bandwidth) {
  return KernelDensity(std::vector<double>(sample.begin(), sample.end()), kernel, bandwidth);
}

NadarayaWatson::NadarayaWatson(std::vector<double> x, std::vector<double> y, Kernel kernel, double bandwidth)
    : kernel_(kernel), bandwidth_(bandwidth) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "x and y lengths differ");
  require_sample(x.size());
  require_bandwidth(bandwidth);
  const auto order = sorted_order(x);
  x_.reserve(x.size());
  y_.reserve(y.size());
  for (std::size_t i : order) {
    x_.push_back(x[i]);
    y_.push_back(y[i]);
  }
}

std::optional<double> NadarayaWatson::operator()(double x) const {
  const double h = kernel_.reach() * bandwidth_;
  const auto lo = static_cast<std::size_t>(std::lower_bound(x_.begin(), x_.end(), x - h) - x_.begin());
  const auto hi = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x + h) - x_.begin());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double w = kernel_((x - x_[i]) / bandwidth_);
    num += w * y_[i];
    den += w;
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

NadarayaWatson fit_nw(std::span<const double> x, std::span<const double> y, Kernel kernel, double bandwidth) {
  return NadarayaWatson(std::vector<double>(x.begin(), x.end()), std::vector<double>(y.begin(), y.end()),
                        kernel, bandwidth);
}

StepFunction fit_km(std::span<const double> times, std::span<const int> flags, TieOrder ties) {
  require_sample(times.size());
  if (times.size() != flags.size()) throw Error(ErrorKind::DimensionMismatch, "times and flags lengths differ");
  for (double t : times) {
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "times must be nonnegative");
  }
  const auto order = sorted_order(times);
  const std::size_t n = times.size();

  std::vector<double> loc;
  std::vector<double> val;
  std::size_t at_risk = n;
  double surv = 1.0;
  // Until the first unflagged exit the estimate is exactly (events so far) / n.
  bool exact = true;
  std::size_t i = 0;
  while (i < n) {
    const double t = times[order[i]];
    std::size_t d = 0;
    std::size_t c = 0;
    for (; i < n && times[order[i]] == t; ++i) (flags[order[i]] != 0 ? d : c)++;
    if (c > 0 && exact && ties == TieOrder::UnflaggedFirst) {
      exact = false;
      surv = static_cast<double>(at_risk) / static_cast<double>(n);
    }
    if (d > 0) {
      const std::size_t risk = ties == TieOrder::UnflaggedFirst ? at_risk - c : at_risk;
      if (exact) {
        surv = static_cast<double>(risk - d) / static_cast<double>(n);
      } else {
        surv *= static_cast<double>(risk - d) / static_cast<double>(risk);
      }
      loc.push_back(t);
      val.push_back(exact ? static_cast<double>(n - (risk - d)) / static_cast<double>(n) : 1.0 - surv);
    }
    if (c > 0 && exact) {
      exact = false;
      surv = static_cast<double>(at_risk - d) / static_cast<double>(n);
    }
    at_risk -= d + c;
  }
  return StepFunction(std::move(loc), std::move(val), 0.0);
}

StepFunction fit_pava_npmle(std::span<const double> check_times, std::span<const int> delta) {
  require_sample(check_times.size());
  if (check_times.size() != delta.size()) {
    throw Error(ErrorKind::DimensionMismatch, "check times and indicators lengths differ");
  }
  const auto order = sorted_order(check_times);

  struct Block {
    double sum;
    double weight;
    std::size_t groups;
  };
  std::vector<double> loc;
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < order.size();) {
    const double t = check_times[order[i]];
    Block b{0.0, 0.0, 1};
    for (; i < order.size() && check_times[order[i]] == t; ++i) {
      b.sum += delta[order[i]] != 0 ? 1.0 : 0.0;
      b.weight += 1.0;
    }
    loc.push_back(t);
    blocks.push_back(b);
    while (blocks.size() > 1) {
      const Block& last = blocks.back();
      const Block& prev = blocks[blocks.size() - 2];
      if (prev.sum * last.weight <= last.sum * prev.weight) break;
      Block merged{prev.sum + last.sum, prev.weight + last.weight, prev.groups + last.groups};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> val;
  val.reserve(loc.size());
  for (const Block& b : blocks) val.insert(val.end(), b.groups, b.sum / b.weight);
  return StepFunction(std::move(loc), std::move(val), 0.0);
}

}  // namespace elplug
