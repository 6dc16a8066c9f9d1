// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "elplug/calibrate.hpp"
#include "elplug/cli.hpp"
#include "elplug/el_dual.hpp"
#include "elplug/el_statistic.hpp"
#include "elplug/error.hpp"
#include "elplug/growingp.hpp"
#include "elplug/plugin.hpp"
#include "elplug/rng.hpp"
#include "elplug/simlab.hpp"

using namespace elplug;

namespace {

constexpr std::uint64_t kMaster = 20261016;

std::uint64_t seed_for(int criterion) { return derive_seed(kMaster, {static_cast<std::uint64_t>(criterion)}); }

std::size_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

double golden_max(const PointSet& ps) {
  const Matrix& x = ps.points();
  const double hi_x = x.maxCoeff();
  const double lo_x = x.minCoeff();
  // Domain of G: 1 + lambda x_i > 0 for all i.
  double a = -1.0 / hi_x;
  double b = -1.0 / lo_x;
  auto g = [&](double l) { return dual_objective(ps, Vector::Constant(1, l)); };
  const double shrink = 1e-12 * (b - a);
  a += shrink;
  b -= shrink;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double gc = g(c);
  double gd = g(d);
  for (int it = 0; it < 400 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - r * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + r * (b - a);
      gd = g(d);
    }
  }
  return std::max(gc, gd);
}

Outcome criterion1() {
  Outcome o;
  std::mt19937_64 eng(seed_for(1));
  std::uniform_int_distribution<int> size(3, 20);
  std::normal_distribution<double> normal;
  int done = 0;
  double worst = 0.0;
  while (done < 100) {
    const int n = size(eng);
    Matrix x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = 0.3 + normal(eng);
    if (x.maxCoeff() <= 0.0 || x.minCoeff() >= 0.0) continue;
    const PointSet ps(x);
    const ELSolution sol = solve_dual(ps);
    const double oracle = golden_max(ps);
    const double err = sol.converged() ? std::abs(sol.t_n - oracle) : INFINITY;
    worst = std::max(worst, err);
    ++done;
  }
  o.check(worst <= 1e-8, "max |t_n - golden| over 100 instances = " + fmt(worst, 3));

  Matrix three(3, 1);
  three << -1.0, 0.0, 2.0;
  const ELSolution s3 = solve_dual(PointSet(three));
  const double le = std::abs(s3.lambda_hat(0) - 0.25);
  const double te = std::abs(s3.t_n - 2.0 * std::log(9.0 / 8.0));
  o.check(le <= 1e-10 && te <= 1e-10, "three-point |lambda - 0.25| = " + fmt(le, 3) + ", |t_n - 2 ln(9/8)| = " + fmt(te, 3));
  return o;
}

Outcome criterion2() {
  Outcome o;
  auto fam = make_family("mean", {});
  const Observations data = Observations::from_column(std::vector<double>{0.0, 1.0});
  fam->fit(data);
  const double c = boost::math::quantile(boost::math::chi_squared(1.0), 0.95);
  const auto ci = confidence_interval(*fam, data, c, 0.95);
  // -2 log(4 w (1 - w)) = c at the endpoints.
  const double half = 0.5 * std::sqrt(1.0 - std::exp(-0.5 * c));
  const double lo = 0.5 - half;
  const double hi = 0.5 + half;
  o.check(std::abs(ci.lo - lo) <= 1e-3 && std::abs(ci.hi - hi) <= 1e-3,
          "interval [" + fmt(ci.lo) + ", " + fmt(ci.hi) + "] vs closed form [" + fmt(lo) + ", " + fmt(hi) + "]");
  o.check(std::abs(ci.lo - 0.0380) <= 1e-3 && std::abs(ci.hi - 0.9620) <= 1e-3, "within 1e-3 of [0.0380, 0.9620]");
  return o;
}

StudyConfig study(const std::string& scenario, std::size_t n, std::size_t p, std::size_t reps, int criterion,
                  std::map<std::string, double> params = {}) {
  StudyConfig cfg;
  cfg.scenario = make_scenario(scenario, n, p, params);
  cfg.family = default_family(scenario);
  cfg.family_options = default_family_options(cfg.scenario);
  cfg.reps = reps;
  cfg.seed = seed_for(criterion);
  cfg.threads = threads();
  return cfg;
}

std::string errors_of(const std::map<std::string, std::size_t>& errors) {
  std::string s;
  for (const auto& [k, v] : errors) s += (s.empty() ? "" : ",") + k + "=" + std::to_string(v);
  return s.empty() ? "none" : s;
}

Outcome criterion3() {
  Outcome o;
  StudyConfig dist = study("many-means", 200, 1, 5000, 3, {{"marginal", 1.0}});
  const auto rep = statistic_distribution(dist);
  const double q = empirical_quantile(rep.t_n, 0.95);
  o.check(std::abs(q - 3.8415) <= 0.15, "95th percentile of t_n = " + fmt(q) + " (5000 reps)");

  StudyConfig cov = study("many-means", 200, 1, 2000, 3, {{"marginal", 1.0}});
  cov.seed = derive_seed(seed_for(3), {1});
  cov.calibration.kind = CalibrationKind::ChiSquare;
  const auto cr = coverage_study(cov);
  o.check(cr.coverage >= 0.93 && cr.coverage <= 0.97, "CI coverage = " + fmt(cr.coverage) + " (2000 reps)");
  std::size_t mismatched = 0;
  for (const auto& r : cr.records) {
    const bool inside = r.lo <= 0.0 && 0.0 <= r.hi;
    if (r.status == "ok" && inside != r.hit) ++mismatched;
  }
  o.check(mismatched == 0, "interval membership agrees with scoring on " + std::to_string(mismatched) + " mismatches");
  return o;
}

Outcome criterion4() {
  Outcome o;
  StudyConfig cfg = study("sym-cdf", 500, 1, 1000, 4);
  cfg.calibration.kind = CalibrationKind::Family;
  cfg.intervals = false;
  const auto rep = coverage_study(cfg);
  const double rejection = 1.0 - rep.coverage;
  o.check(rejection >= 0.025 && rejection <= 0.085,
          "weighted chi-square rejection rate = " + fmt(rejection) + ", errors " + errors_of(rep.errors));

  const Scenario big = make_scenario("sym-cdf", 10000, 1);
  const GeneratedData gen = generate(big, seed_for(4), 1000000);
  auto fam = make_family("sym-cdf", default_family_options(big));
  fam->fit(gen.data);
  const Vector th = *fam->point_estimate(gen.data);
  const Matrix v2 = v2_hat(*fam, gen.data, th);
  const Matrix formula = *fam->v2_formula(gen.theta_true);
  const double diff = (v2 - formula).cwiseAbs().maxCoeff();
  o.check(diff <= 0.02, "max |V2-hat - formula| at n = 1e4 = " + fmt(diff, 3));
  return o;
}

Outcome criterion5() {
  Outcome o;
  StudyConfig cfg = study("sq-density", 1000, 1, 1000, 5);
  cfg.family_options.b0 = 1.0;
  cfg.family_options.alpha = 1.0 / 3.0;
  const auto rep = statistic_distribution(cfg);
  const double q = empirical_quantile(rep.t_n, 0.95);
  const double law = law_quantile(ScaledChiSquare{4.0, 1}, 0.95);
  o.check(std::abs(q - law) <= 1.2, "95th percentile of t_n = " + fmt(q) + " vs 4 chi2_1 quantile " + fmt(law) +
                                        ", errors " + errors_of(rep.errors));
  return o;
}

Outcome criterion6() {
  Outcome o;
  StudyConfig cfg = study("surv", 400, 1, 1000, 6, {{"censor_hi", 3.0}});
  cfg.calibration.kind = CalibrationKind::Family;
  const auto rep = coverage_study(cfg);
  o.check(rep.coverage >= 0.91 && rep.coverage <= 0.98,
          "weighted-calibration coverage = " + fmt(rep.coverage) + ", errors " + errors_of(rep.errors));
  return o;
}

// Independent enumeration for the mean family: statistic n (xbar* - xbar)^2 / s2.
std::vector<double> mean_bootstrap_oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double s2 = 0.0;
  for (double v : x) s2 += (v - mean) * (v - mean);
  s2 /= static_cast<double>(n);
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= n;
  std::vector<double> out;
  out.reserve(total);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t b = 0; b < total; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += x[idx[i]];
    const double d = sum / static_cast<double>(n) - mean;
    out.push_back(static_cast<double>(n) * d * d / s2);
    for (std::size_t i = 0; i < n && ++idx[i] == n; ++i) idx[i] = 0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome criterion7() {
  Outcome o;
  StudyConfig cfg = study("reg-error", 200, 1, 400, 7);
  cfg.calibration.kind = CalibrationKind::Bootstrap;
  cfg.calibration.resamples = 400;
  const auto rep = coverage_study(cfg);
  o.check(rep.coverage >= 0.90 && rep.coverage <= 0.99,
          "bootstrap coverage = " + fmt(rep.coverage) + ", errors " + errors_of(rep.errors));

  std::mt19937_64 eng(seed_for(7));
  std::normal_distribution<double> normal;
  bool all_match = true;
  for (std::size_t n = 2; n <= 5; ++n) {
    std::vector<double> x(n);
    for (auto& v : x) v = normal(eng);
    const Observations data = Observations::from_column(x);
    auto fam = make_family("mean", {});
    fam->fit(data);
    BootstrapOptions bo;
    bo.exhaustive = true;
    bo.level = 0.95;
    const auto res = bootstrap_threshold(*fam, data, *fam->point_estimate(data), bo);
    const auto oracle = mean_bootstrap_oracle(x);
    const std::size_t k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(oracle.size()) - 1e-9));
    bool match = res.law.samples.size() == oracle.size();
    for (std::size_t i = 0; match && i < oracle.size(); ++i) {
      match = std::abs(res.law.samples[i] - oracle[i]) <= 1e-12 * std::max(1.0, oracle[i]);
    }
    match = match && std::abs(res.threshold - oracle[k - 1]) <= 1e-12 * std::max(1.0, oracle[k - 1]);
    all_match = all_match && match;
  }
  o.check(all_match, "exhaustive bootstrap matches enumeration oracle for n = 2..5");
  return o;
}

Outcome rejection_criterion(const std::string& scenario, std::size_t n, std::size_t reps, int criterion, double lo,
                            double hi) {
  Outcome o;
  StudyConfig cfg = study(scenario, n, 1, reps, criterion);
  cfg.calibration.kind = CalibrationKind::ChiSquare;
  cfg.intervals = false;
  const auto rep = coverage_study(cfg);
  const double rejection = 1.0 - rep.coverage;
  o.check(rejection >= lo && rejection <= hi,
          "chi2_1 rejection rate = " + fmt(rejection) + ", errors " + errors_of(rep.errors));
  return o;
}

Outcome criterion10() {
  Outcome o;
  const std::size_t reps = 500;
  double gap2 = 0.0;
  for (std::size_t p : {2u, 5u, 10u}) {
    const auto big = dual_gap_study(make_scenario("many-means", 4000, p, {{"marginal", 0.0}}), reps,
                                    derive_seed(seed_for(10), {p, 4000}), threads());
    const auto small = dual_gap_study(make_scenario("many-means", 1000, p, {{"marginal", 0.0}}), reps,
                                      derive_seed(seed_for(10), {p, 1000}), threads());
    o.check(big.mean_abs_gap < small.mean_abs_gap, "p = " + std::to_string(p) + ": gap " + fmt(small.mean_abs_gap, 4) +
                                                       " (n=1000) -> " + fmt(big.mean_abs_gap, 4) + " (n=4000)");
    if (p == 2) gap2 = big.mean_abs_gap;
    if (p == 10) {
      std::vector<double> t_star;
      for (const auto& s : big.samples) {
        if (std::isfinite(s.t_star)) t_star.push_back(s.t_star);
      }
      const auto nc = normality_check(t_star, p);
      o.check(std::abs(nc.z_mean) <= 0.15 && std::abs(nc.z_var - 1.0) <= 0.25,
              "p = 10 normality z_mean = " + fmt(nc.z_mean, 4) + ", z_var = " + fmt(nc.z_var, 4));
    }
  }
  o.check(gap2 < 0.1, "p = 2 gap at n = 4000 below 0.1");
  return o;
}

// ---------------------------------------------------------------------------

bool solution_ok(const PointSet& ps, const ELSolution& sol, double& worst) {
  if (!sol.converged()) return true;
  const Vector& w = sol.weights;
  const double d = std::max(1.0, ps.max_norm());
  const double sum_err = std::abs(w.sum() - 1.0);
  const double moment = (ps.points().transpose() * w).cwiseAbs().maxCoeff() / d;
  const double grad = dual_gradient(ps, sol.lambda_hat).cwiseAbs().maxCoeff() / (ps.total_weight() * d);
  worst = std::max({worst, sum_err, moment, grad});
  return w.minCoeff() > 0.0 && sum_err <= 1e-10 && moment <= 1e-9 && grad <= 1e-10;
}

std::vector<std::pair<double, double>> brute_isotonic(const std::vector<double>& y) {
  // Best nondecreasing block-mean fit over all partitions into consecutive blocks.
  const std::size_t n = y.size();
  double best = INFINITY;
  std::vector<double> best_fit;
  for (std::size_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> fit(n);
    std::size_t start = 0;
    double prev = -INFINITY;
    bool monotone = true;
    for (std::size_t i = 0; i < n; ++i) {
      const bool cut = i == n - 1 || (mask >> i & 1u);
      if (!cut) continue;
      double m = 0.0;
      for (std::size_t j = start; j <= i; ++j) m += y[j];
      m /= static_cast<double>(i - start + 1);
      if (m < prev - 1e-15) monotone = false;
      prev = m;
      for (std::size_t j = start; j <= i; ++j) fit[j] = m;
      start = i + 1;
    }
    if (!monotone) continue;
    double sse = 0.0;
    for (std::size_t j = 0; j < n; ++j) sse += (y[j] - fit[j]) * (y[j] - fit[j]);
    if (sse < best - 1e-15) {
      best = sse;
      best_fit = fit;
    }
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t j = 0; j < n; ++j) out.emplace_back(static_cast<double>(j), best_fit[j]);
  return out;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion11() {
  Outcome o;
  std::mt19937_64 eng(seed_for(11));
  std::normal_distribution<double> normal;

  double worst_affine = 0.0;
  double worst_solution = 0.0;
  bool solutions_ok = true;
  int maps = 0;
  while (maps < 50) {
    const int p = 1 + maps % 4;
    const int n = 15 + 5 * p;
    Matrix x(n, p);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) x(i, j) = 0.2 + normal(eng);
    }
    Matrix a(p, p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) a(i, j) = normal(eng);
    }
    Eigen::JacobiSVD<Matrix> svd(a);
    const double cond = svd.singularValues()(0) / svd.singularValues()(p - 1);
    if (cond > 1e3) continue;
    const PointSet base(x);
    const PointSet mapped(x * a.transpose());
    const ELSolution s0 = solve_dual(base);
    const ELSolution s1 = solve_dual(mapped);
    if (!s0.converged()) continue;
    ++maps;
    const auto q0 = quadratic_stat(base);
    const auto q1 = quadratic_stat(mapped);
    const double rel_t = std::abs(s1.t_n - s0.t_n) / std::max(1.0, std::abs(s0.t_n));
    const double rel_q = std::abs(q1.t_star - q0.t_star) / std::max(1.0, std::abs(q0.t_star));
    worst_affine = std::max({worst_affine, rel_t, rel_q});
    solutions_ok = solution_ok(base, s0, worst_solution) && solution_ok(mapped, s1, worst_solution) && solutions_ok;
  }
  o.check(worst_affine <= 1e-8, "affine invariance over 50 maps, max rel error " + fmt(worst_affine, 3));
  o.check(solutions_ok, "weights/moment/gradient at optimum, worst residual " + fmt(worst_solution, 3));

  bool km_ok = true;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> t(12);
    for (auto& v : t) v = std::round(4.0 * std::abs(normal(eng))) / 2.0;  // ties included
    const std::vector<int> flags(t.size(), 1);
    const StepFunction km = fit_km(t, flags);
    const StepFunction ecdf = fit_ecdf(t);
    for (double probe = -0.5; probe <= 5.0; probe += 0.25) km_ok = km_ok && std::abs(km(probe) - ecdf(probe)) <= 1e-14;
  }
  o.check(km_ok, "KM equals ECDF without censoring");

  bool pava_ok = true;
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t pattern = 0; pattern < (1u << n); ++pattern) {
      std::vector<double> c(n);
      std::vector<int> d(n);
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        c[i] = 0.5 + static_cast<double>(i);
        d[i] = static_cast<int>(pattern >> i & 1u);
        y[i] = d[i];
      }
      const StepFunction f = fit_pava_npmle(c, d);
      const auto oracle = brute_isotonic(y);
      for (std::size_t i = 0; i < n; ++i) pava_ok = pava_ok && std::abs(f(c[i]) - oracle[i].second) <= 1e-12;
    }
  }
  o.check(pava_ok, "PAVA equals brute-force isotonic fit for n <= 6");

  const auto dir = std::filesystem::temp_directory_path() / ("elplug_accept_" + std::to_string(seed_for(11) % 100000));
  std::filesystem::create_directories(dir);
  auto simulate = [&](const std::string& threads, const std::string& tag) {
    const std::vector<std::string> args{"simulate", "--scenario", "sym-cdf", "--n", "150", "--reps", "60",
                                        "--seed", "7", "--threads", threads, "--out", (dir / tag).string()};
    const auto cfg = cli::parse_config(args);
    const auto res = cli::run(cfg);
    std::ostringstream sink;
    cli::emit_report(res, cfg, sink);
    return res.exit_code;
  };
  const int e1 = simulate("1", "t1");
  const int e8 = simulate("8", "t8");
  const bool same = e1 == 0 && e8 == 0 && read_all(dir / "t1.csv") == read_all(dir / "t8.csv") &&
                    read_all(dir / "t1.json") == read_all(dir / "t8.json") && !read_all(dir / "t1.csv").empty();
  std::filesystem::remove_all(dir);
  o.check(same, "simulate output identical under --threads 1 and 8");
  return o;
}

struct Criterion {
  int id;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, 1.0, criterion1},
      {2, 1.0, criterion2},
      {3, 60.0, criterion3},
      {4, 120.0, criterion4},
      {5, 180.0, criterion5},
      {6, 180.0, criterion6},
      {7, 600.0, criterion7},
      {8, 120.0, [] { return rejection_criterion("density-point", 2000, 1000, 8, 0.02, 0.09); }},
      {9, 600.0, [] { return rejection_criterion("current-status", 3000, 300, 9, 0.01, 0.12); }},
      {10, 300.0, criterion10},
      {11, 120.0, criterion11},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs < c.limit_seconds, "runtime " + fmt(secs, 3) + " s < " + fmt(c.limit_seconds, 4) + " s");
    if (!o.pass) ++failures;
    std::printf("criterion %d: %s  %s\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
