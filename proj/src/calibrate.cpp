#include "elplug/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "elplug/error.hpp"
#include "elplug/parallel.hpp"
#include "elplug/rng.hpp"

namespace elplug {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// t_n(theta) / a_n along scalar theta; +inf outside the hull.
class ScalarStatistic {
 public:
  ScalarStatistic(const Evaluator& ev, const SolveOptions& solve)
      : ev_(ev), a_n_(ev.family().a_n(ev.n())) {
    opts_.solve = solve;
  }

  double operator()(double theta) const {
    const auto rep = evaluate_points(PointSet(ev_.points(Vector::Constant(1, theta))), a_n_, opts_);
    switch (rep.solution.status) {
      case SolveStatus::Converged: return rep.statistic;
      case SolveStatus::HullViolation: return kInf;
      case SolveStatus::SingularSystem:
        throw Error(ErrorKind::SingularSystem, "singular Newton system at theta = " + std::to_string(theta));
      case SolveStatus::MaxIterations:
        throw Error(ErrorKind::MaxIterations, "dual solve did not converge at theta = " + std::to_string(theta));
    }
    return kInf;
  }

 private:
  const Evaluator& ev_;
  double a_n_;
  StatOptions opts_;
};

void require_scalar(const EstimatingFamily& family) {
  if (family.theta_dim() != 1) {
    throw Error(ErrorKind::Unsupported, family.name() + ": intervals need a scalar parameter; use a region");
  }
}

// theta-step at which t_n grows by about one, from the local quadratic form.
double step_scale(const Evaluator& ev, double theta) {
  const double h = 1e-6 * std::max(1.0, std::abs(theta));
  const Matrix x = ev.points(Vector::Constant(1, theta));
  const Matrix dx = (ev.points(Vector::Constant(1, theta + h)) - ev.points(Vector::Constant(1, theta - h))) / (2.0 * h);
  const Vector d = dx.colwise().sum().transpose();
  const Matrix v = x.transpose() * x;
  const double fallback = 1e-3 * std::max(1.0, std::abs(theta));
  if (symmetric_rank(v) < static_cast<std::size_t>(v.rows())) return fallback;
  const double q = d.dot(v.ldlt().solve(d));
  if (!(q > 0.0) || !std::isfinite(q)) return fallback;
  return 1.0 / std::sqrt(q);
}

// Last theta below `target` between inside point a (f(a) < target) and b (f(b) >= target).
double bisect(const ScalarStatistic& f, double a, double b, double target, double rel_tol) {
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    const double fm = f(m);
    if (std::isfinite(target) && std::abs(fm - target) <= rel_tol * target) return m;
    if (fm < target) {
      a = m;
    } else {
      b = m;
    }
  }
  return a;
}

struct Endpoint {
  double value;
  bool open;
};

Endpoint search_side(const ScalarStatistic& f, double center, double step, double direction, double threshold,
                     const IntervalOptions& opts) {
  double inside = center;
  for (int k = 0; k <= opts.max_doublings; ++k) {
    const double probe = center + direction * step * std::ldexp(1.0, k);
    const double fp = f(probe);
    if (std::isinf(threshold)) {
      if (std::isinf(fp)) return {bisect(f, inside, probe, kInf, opts.rel_tol), true};
    } else if (fp >= threshold) {
      return {bisect(f, inside, probe, threshold, opts.rel_tol), false};
    }
    inside = probe;
  }
  throw Error(ErrorKind::NoRoot, "statistic stays below the threshold out to theta = " + std::to_string(inside));
}

}  // namespace

Matrix v2_hat(const EstimatingFamily& family, const Observations& data, const Vector& theta_hat) {
  const Matrix x = family.evaluate_all(data, theta_hat);
  return family.a_n(data.size()) * (x.transpose() * x);
}

BootstrapResult bootstrap_threshold(const EstimatingFamily& family, const Observations& data,
                                    const Vector& theta_hat, const BootstrapOptions& opts) {
  if (!opts.exhaustive && opts.resamples == 0) {
    throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least one resample");
  }
  const std::size_t n = data.size();
  if (n == 0) throw Error(ErrorKind::EmptySample, "bootstrap on an empty sample");
  if (!family.root_n() || family.a_n(n) != 1.0) {
    throw Error(ErrorKind::Unsupported, family.name() + ": bootstrap calibration needs a root-n family with a_n = 1");
  }
  if (opts.exhaustive && n > 7) {
    throw Error(ErrorKind::InvalidArgument, "exhaustive bootstrap is limited to n <= 7");
  }

  BootstrapResult res;
  const auto formula = family.v2_formula(theta_hat);
  res.v2 = formula ? *formula : v2_hat(family, data, theta_hat);
  Eigen::SelfAdjointEigenSolver<Matrix> es(res.v2, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(top > 0.0) || !(es.eigenvalues().minCoeff() > 1e-12 * top)) {
    throw Error(ErrorKind::SingularV2, family.name() + ": V2 estimate is singular");
  }
  const Eigen::LDLT<Matrix> v2_solver(res.v2);
  const Vector base = family.evaluate_all(data, theta_hat).colwise().sum().transpose();

  std::size_t count = opts.resamples;
  if (opts.exhaustive) {
    count = 1;
    for (std::size_t i = 0; i < n; ++i) count *= n;
  }
  std::vector<double> stats(count);
  parallel_for(count, opts.threads, [&](std::size_t b) {
    std::vector<std::size_t> idx(n);
    if (opts.exhaustive) {
      std::size_t code = b;
      for (std::size_t i = 0; i < n; ++i, code /= n) idx[i] = code % n;
    } else {
      Engine eng = make_stream(opts.seed, b, StreamPurpose::Bootstrap);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& v : idx) v = pick(eng);
    }
    const Observations resample = data.subset(idx);
    Vector diff;
    try {
      auto refit = family.clone();
      refit->fit(resample);
      diff = refit->evaluate_all(resample, theta_hat).colwise().sum().transpose() - base;
    } catch (const Error& e) {
      throw Error(ErrorKind::PluginRefitFailure, "resample " + std::to_string(b) + ": " + e.what());
    }
    stats[b] = diff.dot(v2_solver.solve(diff));
  });
  std::sort(stats.begin(), stats.end());
  res.law.samples = std::move(stats);
  res.threshold = law_quantile(res.law, opts.level);
  return res;
}

CalibrationKind parse_calibration(const std::string& name) {
  if (name == "chisq") return CalibrationKind::ChiSquare;
  if (name == "family" || name == "law") return CalibrationKind::Family;
  if (name == "bootstrap") return CalibrationKind::Bootstrap;
  throw Error(ErrorKind::InvalidArgument, "unknown calibration '" + name + "' (chisq | family | bootstrap)");
}

std::string to_string(CalibrationKind kind) {
  switch (kind) {
    case CalibrationKind::ChiSquare: return "chisq";
    case CalibrationKind::Family: return "family";
    case CalibrationKind::Bootstrap: return "bootstrap";
    case CalibrationKind::Explicit: return "explicit";
  }
  return "unknown";
}

Threshold calibrate_threshold(const EstimatingFamily& family, const Observations& data, const CalibrationSpec& spec,
                              double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1)");
  Threshold out{0.0, ChiSquare{static_cast<int>(family.dim())}};
  switch (spec.kind) {
    case CalibrationKind::ChiSquare: break;
    case CalibrationKind::Family: {
      auto law = family.limit_law(data);
      if (!law) throw Error(ErrorKind::Unsupported, family.name() + ": no reference law, use bootstrap calibration");
      out.law = *std::move(law);
      break;
    }
    case CalibrationKind::Bootstrap: {
      const auto theta_hat = family.point_estimate(data);
      if (!theta_hat) throw Error(ErrorKind::Unsupported, family.name() + ": no point estimate to bootstrap around");
      BootstrapOptions bo;
      bo.resamples = spec.resamples;
      bo.level = level;
      bo.seed = spec.seed;
      bo.threads = spec.threads;
      auto res = bootstrap_threshold(family, data, *theta_hat, bo);
      out.value = res.threshold;
      out.law = std::move(res.law);
      return out;
    }
    case CalibrationKind::Explicit:
      if (!spec.law) throw Error(ErrorKind::InvalidArgument, "explicit calibration needs a law");
      out.law = *spec.law;
      break;
  }
  out.value = law_quantile(out.law, level, spec.draws);
  return out;
}

bool ConfidenceInterval::contains(double theta) const noexcept {
  if (empty) return false;
  const bool above = lo_open ? theta > lo : theta >= lo;
  const bool below = hi_open ? theta < hi : theta <= hi;
  return above && below;
}

double interval_center(const Evaluator& ev, const IntervalOptions& opts) {
  const auto& family = ev.family();
  require_scalar(family);
  const auto estimate = family.point_estimate(ev.data());
  if (!estimate) throw Error(ErrorKind::Unsupported, family.name() + ": no point estimate for the interval center");
  double c = (*estimate)(0);
  if (family.dim() == 1) return c;

  // Overidentified: minimize t_n by golden section around the estimate.
  const ScalarStatistic f(ev, opts.solve);
  const double s = 4.0 * step_scale(ev, c);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = c - s;
  double b = c + s;
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 80 && b - a > 1e-12 * std::max(1.0, std::abs(c)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  const double m = f1 <= f2 ? x1 : x2;
  return std::min(f1, f2) <= f(c) ? m : c;
}

ConfidenceInterval confidence_interval(const EstimatingFamily& family, const Observations& data, double threshold,
                                       double level, const IntervalOptions& opts) {
  require_scalar(family);
  if (!(threshold >= 0.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be >= 0");
  const Evaluator ev(family, data);
  const ScalarStatistic f(ev, opts.solve);

  ConfidenceInterval ci;
  ci.level = level;
  ci.threshold = threshold;
  ci.center = interval_center(ev, opts);
  ci.lo = ci.hi = ci.center;
  ci.empty = f(ci.center) > threshold;
  if (threshold == 0.0 || ci.empty) return ci;

  const double step = step_scale(ev, ci.center);
  const Endpoint lo = search_side(f, ci.center, step, -1.0, threshold, opts);
  const Endpoint hi = search_side(f, ci.center, step, +1.0, threshold, opts);
  ci.lo = lo.value;
  ci.lo_open = lo.open;
  ci.hi = hi.value;
  ci.hi_open = hi.open;
  return ci;
}

ConfidenceRegion confidence_region(const EstimatingFamily& family, const Observations& data, double threshold,
                                   double level, const SolveOptions& solve) {
  ConfidenceRegion region;
  region.level = level;
  region.threshold = threshold;
  region.contains = [&family, &data, threshold, solve](const Vector& theta) {
    StatOptions so;
    so.solve = solve;
    const auto rep = el_statistic(family, data, theta, so);
    return rep.solution.converged() && rep.statistic <= threshold;
  };
  return region;
}

std::vector<std::pair<double, double>> statistic_curve(const EstimatingFamily& family, const Observations& data,
                                                       double lo, double hi, std::size_t points,
                                                       const SolveOptions& solve) {
  require_scalar(family);
  const Evaluator ev(family, data);
  const ScalarStatistic f(ev, solve);
  std::vector<std::pair<double, double>> out;
  out.reserve(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double theta = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    out.emplace_back(theta, f(theta));
  }
  return out;
}

}  // namespace elplug
