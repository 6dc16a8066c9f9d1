#include "elplug/limit_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "elplug/error.hpp"
#include "elplug/rng.hpp"

namespace elplug {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1)");
  }
}

// Positive weights only; a common value is reported through `common`.
std::vector<double> active_weights(const std::vector<double>& r, double& common) {
  std::vector<double> w;
  for (double v : r) {
    if (v > 0.0) w.push_back(v);
  }
  common = w.empty() ? 0.0 : w.front();
  for (double v : w) {
    if (std::abs(v - common) > 1e-14 * common) {
      common = std::numeric_limits<double>::quiet_NaN();
      break;
    }
  }
  return w;
}

std::vector<double> weighted_draws(const std::vector<double>& w, std::size_t draws) {
  Engine eng(kLawSeed);
  std::normal_distribution<double> z;
  std::vector<double> out(draws);
  for (auto& v : out) {
    double s = 0.0;
    for (double r : w) {
      const double g = z(eng);
      s += r * g * g;
    }
    v = s;
  }
  return out;
}

double chi2_quantile(int p, double level) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(p), level);
}

double chi2_cdf(int p, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(p), x);
}

std::size_t order_index(double level, std::size_t count) {
  // ceil(level * B), guarding against representation error in level * B.
  const double k = std::ceil(level * static_cast<double>(count) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, count);
}

}  // namespace

void validate(const LimitLaw& law) {
  std::visit(Overloaded{
                 [](const ChiSquare& l) {
                   if (l.p < 1) throw Error(ErrorKind::InvalidArgument, "chi-square needs p >= 1");
                 },
                 [](const ScaledChiSquare& l) {
                   if (l.p < 1 || !(l.c > 0.0)) {
                     throw Error(ErrorKind::InvalidArgument, "scaled chi-square needs p >= 1 and c > 0");
                   }
                 },
                 [](const WeightedChiSquare& l) {
                   if (l.r.empty()) throw Error(ErrorKind::InvalidArgument, "weighted chi-square needs weights");
                   for (double v : l.r) {
                     if (!(v >= 0.0) || !std::isfinite(v)) {
                       throw Error(ErrorKind::InvalidArgument, "weighted chi-square weights must be >= 0");
                     }
                   }
                 },
                 [](const BootstrapEmpirical& l) {
                   if (l.samples.empty()) throw Error(ErrorKind::InvalidArgument, "empirical law has no samples");
                   if (!std::is_sorted(l.samples.begin(), l.samples.end())) {
                     throw Error(ErrorKind::InvalidArgument, "empirical law samples must be sorted");
                   }
                 },
             },
             law);
}

std::string describe(const LimitLaw& law) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const ChiSquare& l) { os << "chisq(" << l.p << ")"; },
                 [&](const ScaledChiSquare& l) { os << l.c << "*chisq(" << l.p << ")"; },
                 [&](const WeightedChiSquare& l) {
                   os << "wchisq(";
                   for (std::size_t j = 0; j < l.r.size(); ++j) os << (j ? "," : "") << l.r[j];
                   os << ")";
                 },
                 [&](const BootstrapEmpirical& l) { os << "bootstrap(B=" << l.samples.size() << ")"; },
             },
             law);
  return os.str();
}

double law_quantile(const LimitLaw& law, double level, std::size_t draws) {
  require_level(level);
  validate(law);
  return std::visit(
      Overloaded{
          [&](const ChiSquare& l) { return chi2_quantile(l.p, level); },
          [&](const ScaledChiSquare& l) { return l.c * chi2_quantile(l.p, level); },
          [&](const WeightedChiSquare& l) {
            double common = 0.0;
            const auto w = active_weights(l.r, common);
            if (w.empty()) return 0.0;
            if (!std::isnan(common)) return common * chi2_quantile(static_cast<int>(w.size()), level);
            if (draws == 0) throw Error(ErrorKind::InvalidArgument, "draw count must be positive");
            auto samples = weighted_draws(w, draws);
            const std::size_t k = order_index(level, draws) - 1;
            std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(k), samples.end());
            return samples[k];
          },
          [&](const BootstrapEmpirical& l) { return l.samples[order_index(level, l.samples.size()) - 1]; },
      },
      law);
}

double law_cdf(const LimitLaw& law, double x, std::size_t draws) {
  validate(law);
  return std::visit(
      Overloaded{
          [&](const ChiSquare& l) { return chi2_cdf(l.p, x); },
          [&](const ScaledChiSquare& l) { return chi2_cdf(l.p, x / l.c); },
          [&](const WeightedChiSquare& l) {
            double common = 0.0;
            const auto w = active_weights(l.r, common);
            if (w.empty()) return x >= 0.0 ? 1.0 : 0.0;
            if (!std::isnan(common)) return chi2_cdf(static_cast<int>(w.size()), x / common);
            if (draws == 0) throw Error(ErrorKind::InvalidArgument, "draw count must be positive");
            const auto samples = weighted_draws(w, draws);
            const auto below = std::count_if(samples.begin(), samples.end(), [&](double s) { return s <= x; });
            return static_cast<double>(below) / static_cast<double>(draws);
          },
          [&](const BootstrapEmpirical& l) {
            const auto it = std::upper_bound(l.samples.begin(), l.samples.end(), x);
            return static_cast<double>(it - l.samples.begin()) / static_cast<double>(l.samples.size());
          },
      },
      law);
}

double law_pvalue(const LimitLaw& law, double x, std::size_t draws) {
  if (x <= 0.0) return 1.0;
  if (const auto* emp = std::get_if<BootstrapEmpirical>(&law)) {
    validate(law);
    const auto it = std::lower_bound(emp->samples.begin(), emp->samples.end(), x);
    return static_cast<double>(emp->samples.end() - it) / static_cast<double>(emp->samples.size());
  }
  return std::clamp(1.0 - law_cdf(law, x, draws), 0.0, 1.0);
}

std::vector<double> eigen_weights(const Matrix& v1, const Matrix& v2) {
  if (v1.rows() != v1.cols() || v2.rows() != v2.cols() || v1.rows() != v2.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "V1 and V2 must be square of equal size");
  }
  const Matrix s2 = 0.5 * (v2 + v2.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es2(s2);
  const Vector ev = es2.eigenvalues();
  if (!ev.allFinite() || !(ev(0) > 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff()))) {
    throw Error(ErrorKind::NotPositiveDefinite, "V2 is not positive definite");
  }
  const Matrix root_inv = es2.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                          es2.eigenvectors().transpose();
  const Matrix pencil = root_inv * (0.5 * (v1 + v1.transpose())) * root_inv;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (pencil + pencil.transpose()), Eigen::EigenvaluesOnly);
  std::vector<double> r(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  for (double& v : r) v = std::max(v, 0.0);
  std::sort(r.begin(), r.end(), std::greater<>());
  return r;
}

}  // namespace elplug
