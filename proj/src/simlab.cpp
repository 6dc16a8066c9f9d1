#include "elplug/simlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "elplug/error.hpp"
#include "elplug/parallel.hpp"
#include "elplug/rng.hpp"

namespace elplug {

namespace {

const std::map<std::string, std::map<std::string, double>>& registry() {
  static const std::map<std::string, std::map<std::string, double>> table{
      // marginal: 0 = uniform on [-sqrt3, sqrt3], 1 = standard normal, 2 = point mass at mu
      {"many-means", {{"marginal", 0.0}, {"mu", 0.0}}},
      // beta has every component equal to beta_norm / sqrt(p)
      {"poisson-reg", {{"beta_norm", 0.0}}},
      {"ortho-null", {}},
      // y = 1 + sum_{j<=terms} psi_j(x) / j^2 + N(0, sigma^2), x ~ U(0, 1)
      {"poly-reg", {{"sigma", 1.0}, {"terms", 3.0}}},
      {"sym-cdf", {{"x", 0.5}, {"a", 0.0}}},
      {"sq-density", {{"sd", 1.0}}},
      // exponential(1) lifetimes; U(0, censor_hi) censoring, or exponential(censor_rate) when the rate is > 0
      {"surv", {{"censor_hi", 3.0}, {"censor_rate", 0.0}}},
      // x ~ U(0, 1), y = sin(2 pi x) + N(0, sigma^2)
      {"reg-error", {{"sigma", 0.5}, {"z", 0.0}}},
      {"density-point", {{"t", 0.0}}},
      // exponential(1) event times, U(0, c_hi) check times
      {"current-status", {{"t", 1.0}, {"c_hi", 2.0}}},
  };
  return table;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double param(const Scenario& s, const std::string& key) {
  const auto it = s.params.find(key);
  if (it != s.params.end()) return it->second;
  return scenario_params(s.name).at(key);
}

std::string kind_name(ErrorKind k) { return std::string(to_string(k)); }

std::string status_of(const ELSolution& sol) { return sol.converged() ? "ok" : std::string(to_string(sol.status)); }

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

const std::map<std::string, double>& scenario_params(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw Error(ErrorKind::UnknownScenario, "unknown scenario '" + name + "'");
  return it->second;
}

Scenario make_scenario(const std::string& name, std::size_t n, std::size_t p, const std::map<std::string, double>& params) {
  const auto& defaults = scenario_params(name);
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "scenario needs n >= 1");
  if (p == 0 && name != "poly-reg") throw Error(ErrorKind::InvalidArgument, "scenario needs p >= 1");
  Scenario s{name, n, p, defaults};
  for (const auto& [key, value] : params) {
    if (!defaults.contains(key)) {
      throw Error(ErrorKind::InvalidArgument, "scenario '" + name + "' has no parameter '" + key + "'");
    }
    s.params[key] = value;
  }
  return s;
}

GeneratedData generate(const Scenario& s, std::uint64_t seed, std::uint64_t replicate) {
  const auto& defaults = scenario_params(s.name);
  for (const auto& [key, _] : s.params) {
    if (!defaults.contains(key)) {
      throw Error(ErrorKind::InvalidArgument, "scenario '" + s.name + "' has no parameter '" + key + "'");
    }
  }
  Engine eng = make_stream(seed, replicate, StreamPurpose::Data);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const std::size_t n = s.n;
  const std::size_t p = s.p;
  GeneratedData out;

  if (s.name == "many-means") {
    const int marginal = static_cast<int>(param(s, "marginal"));
    const double mu = param(s, "mu");
    if (marginal < 0 || marginal > 2) throw Error(ErrorKind::InvalidArgument, "many-means: marginal must be 0, 1 or 2");
    Observations d(n, p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        double e = 0.0;
        if (marginal == 0) e = std::numbers::sqrt3 * (2.0 * unif(eng) - 1.0);
        if (marginal == 1) e = normal(eng);
        d(i, j) = mu + e;
      }
    }
    out.data = std::move(d);
    out.theta_true = Vector::Constant(static_cast<Eigen::Index>(p), mu);
  } else if (s.name == "poisson-reg") {
    const Vector beta = Vector::Constant(static_cast<Eigen::Index>(p), param(s, "beta_norm") / std::sqrt(static_cast<double>(p)));
    Observations d(n, p + 1);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        d(i, j) = normal(eng);
        eta += d(i, j) * beta(static_cast<Eigen::Index>(j));
      }
      std::poisson_distribution<long> pois(std::exp(eta));
      d(i, p) = static_cast<double>(pois(eng));
    }
    out.data = std::move(d);
    out.theta_true = beta;
  } else if (s.name == "ortho-null") {
    Observations d(n, 1);
    for (std::size_t i = 0; i < n; ++i) d(i, 0) = unif(eng);
    out.data = std::move(d);
    out.theta_true = Vector::Zero(static_cast<Eigen::Index>(p));
  } else if (s.name == "poly-reg") {
    const double sigma = param(s, "sigma");
    const auto terms = static_cast<std::size_t>(std::max(0.0, param(s, "terms")));
    Vector coef = Vector::Zero(static_cast<Eigen::Index>(std::max(terms, p) + 1));
    coef(0) = 1.0;
    for (std::size_t j = 1; j <= terms; ++j) coef(static_cast<Eigen::Index>(j)) = 1.0 / static_cast<double>(j * j);
    Observations d(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = unif(eng);
      double y = coef(0);
      if (terms > 0) y += cosine_basis(x, terms).dot(coef.segment(1, static_cast<Eigen::Index>(terms)));
      d(i, 0) = x;
      d(i, 1) = y + sigma * normal(eng);
    }
    out.data = std::move(d);
    out.theta_true = coef.head(static_cast<Eigen::Index>(p + 1));
  } else if (s.name == "sym-cdf") {
    const double a = param(s, "a");
    Observations d(n, 1);
    for (std::size_t i = 0; i < n; ++i) d(i, 0) = a + normal(eng);
    out.data = std::move(d);
    out.theta_true = Vector::Constant(1, normal_cdf(param(s, "x") - a));
  } else if (s.name == "sq-density") {
    const double sd = param(s, "sd");
    Observations d(n, 1);
    for (std::size_t i = 0; i < n; ++i) d(i, 0) = sd * normal(eng);
    out.data = std::move(d);
    out.theta_true = Vector::Constant(1, 0.5 * std::numbers::inv_sqrtpi / sd);
  } else if (s.name == "surv") {
    const double hi = param(s, "censor_hi");
    const double rate = param(s, "censor_rate");
    std::exponential_distribution<double> life(1.0);
    Observations d(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = life(eng);
      const double c = rate > 0.0 ? std::exponential_distribution<double>(rate)(eng) : hi * unif(eng);
      d(i, 0) = std::min(t, c);
      d(i, 1) = t <= c ? 1.0 : 0.0;
    }
    out.data = std::move(d);
    // Mean lifetime restricted to the censoring support.
    out.theta_true = Vector::Constant(1, rate > 0.0 ? 1.0 : 1.0 - (1.0 + hi) * std::exp(-hi));
  } else if (s.name == "reg-error") {
    const double sigma = param(s, "sigma");
    Observations d(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = unif(eng);
      d(i, 0) = x;
      d(i, 1) = std::sin(2.0 * std::numbers::pi * x) + sigma * normal(eng);
    }
    out.data = std::move(d);
    out.theta_true = Vector::Constant(1, normal_cdf(param(s, "z") / sigma));
  } else if (s.name == "density-point") {
    const double t = param(s, "t");
    Observations d(n, 1);
    for (std::size_t i = 0; i < n; ++i) d(i, 0) = normal(eng);
    out.data = std::move(d);
    out.theta_true = Vector::Constant(1, std::exp(-0.5 * t * t) * std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  } else if (s.name == "current-status") {
    const double t = param(s, "t");
    const double c_hi = param(s, "c_hi");
    std::exponential_distribution<double> life(1.0);
    Observations d(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      const double ev = life(eng);
      const double c = c_hi * unif(eng);
      d(i, 0) = c;
      d(i, 1) = ev <= c ? 1.0 : 0.0;
    }
    out.data = std::move(d);
    out.theta_true = Vector::Constant(1, std::exp(-t));
  } else {
    throw Error(ErrorKind::UnknownScenario, "unknown scenario '" + s.name + "'");
  }
  return out;
}

std::string default_family(const std::string& scenario) {
  static const std::map<std::string, std::string> table{
      {"many-means", "mean"},       {"poisson-reg", "poisson-reg"}, {"ortho-null", "ortho-series"},
      {"poly-reg", "poly-reg"},     {"sym-cdf", "sym-cdf"},         {"sq-density", "sq-density"},
      {"surv", "surv-functional"},  {"reg-error", "reg-error"},     {"density-point", "density-point"},
      {"current-status", "current-status"}};
  const auto it = table.find(scenario);
  if (it == table.end()) throw Error(ErrorKind::UnknownScenario, "unknown scenario '" + scenario + "'");
  return it->second;
}

FamilyOptions default_family_options(const Scenario& s) {
  FamilyOptions o;
  o.p = s.p;
  if (s.name == "sym-cdf") o.x = param(s, "x");
  if (s.name == "reg-error") o.z = param(s, "z");
  if (s.name == "density-point" || s.name == "current-status") o.t = param(s, "t");
  return o;
}

CoverageReport coverage_study(const StudyConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (!(config.level > 0.0 && config.level < 1.0)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1)");
  // Configuration errors surface here, before any replicate runs.
  scenario_params(config.scenario.name);
  const auto probe = make_family(config.family, config.family_options);
  const bool intervals = config.intervals && probe->theta_dim() == 1;

  CoverageReport rep;
  rep.reps = config.reps;
  rep.records.resize(config.reps);
  parallel_for(config.reps, config.threads, [&](std::size_t r) {
    ReplicateRecord rec;
    rec.replicate = r;
    rec.lo = rec.hi = std::numeric_limits<double>::quiet_NaN();
    rec.t_star = std::numeric_limits<double>::quiet_NaN();
    rec.statistic = std::numeric_limits<double>::quiet_NaN();
    try {
      const GeneratedData gen = generate(config.scenario, config.seed, r);
      auto family = make_family(config.family, config.family_options);
      family->fit(gen.data);
      CalibrationSpec spec = config.calibration;
      spec.seed = derive_seed(config.seed, {r, static_cast<std::uint64_t>(StreamPurpose::Bootstrap)});
      spec.threads = 1;
      const Threshold thr = calibrate_threshold(*family, gen.data, spec, config.level);
      rec.threshold = thr.value;
      const auto stat = el_statistic(*family, gen.data, gen.theta_true);
      rec.statistic = stat.statistic;
      if (stat.quad) rec.t_star = stat.quad->t_star / stat.a_n;
      rec.status = status_of(stat.solution);
      rec.hit = stat.solution.converged() && stat.statistic <= thr.value;
      if (intervals && stat.solution.status != SolveStatus::SingularSystem) {
        try {
          const auto ci = confidence_interval(*family, gen.data, thr.value, config.level);
          rec.lo = ci.lo;
          rec.hi = ci.hi;
        } catch (const Error& e) {
          if (rec.status == "ok") rec.status = "interval:" + kind_name(e.kind());
        }
      }
    } catch (const Error& e) {
      rec.status = kind_name(e.kind());
      rec.hit = false;
    }
    rep.records[r] = rec;
  });

  std::vector<double> widths;
  for (const auto& rec : rep.records) {
    if (rec.hit) ++rep.hits;
    if (rec.status != "ok") ++rep.errors[rec.status];
    if (std::isfinite(rec.hi - rec.lo)) widths.push_back(rec.hi - rec.lo);
  }
  rep.coverage = rep.reps ? static_cast<double>(rep.hits) / static_cast<double>(rep.reps) : 0.0;
  if (!widths.empty()) {
    double sum = 0.0;
    for (double w : widths) sum += w;
    rep.mean_width = sum / static_cast<double>(widths.size());
    std::sort(widths.begin(), widths.end());
    const std::size_t m = widths.size();
    rep.median_width = m % 2 ? widths[m / 2] : 0.5 * (widths[m / 2 - 1] + widths[m / 2]);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

DistributionReport statistic_distribution(const StudyConfig& config, std::optional<Vector> theta) {
  scenario_params(config.scenario.name);
  make_family(config.family, config.family_options);
  DistributionReport rep;
  rep.t_n.assign(config.reps, std::numeric_limits<double>::quiet_NaN());
  rep.t_star.assign(config.reps, std::numeric_limits<double>::quiet_NaN());
  rep.status.assign(config.reps, "ok");
  parallel_for(config.reps, config.threads, [&](std::size_t r) {
    try {
      const GeneratedData gen = generate(config.scenario, config.seed, r);
      auto family = make_family(config.family, config.family_options);
      family->fit(gen.data);
      const auto stat = el_statistic(*family, gen.data, theta ? *theta : gen.theta_true);
      rep.t_n[r] = stat.statistic;
      if (stat.quad) rep.t_star[r] = stat.quad->t_star / stat.a_n;
      rep.status[r] = status_of(stat.solution);
    } catch (const Error& e) {
      rep.status[r] = kind_name(e.kind());
    }
  });
  for (const auto& s : rep.status) {
    if (s != "ok") ++rep.errors[s];
  }
  return rep;
}

double empirical_quantile(std::vector<double> samples, double level) {
  std::erase_if(samples, [](double v) { return std::isnan(v); });
  if (samples.empty()) throw Error(ErrorKind::EmptySample, "no samples for the quantile");
  std::sort(samples.begin(), samples.end());
  return law_quantile(BootstrapEmpirical{std::move(samples)}, level);
}

}  // namespace elplug
