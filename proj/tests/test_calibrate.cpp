#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "elplug/calibrate.hpp"
#include "elplug/error.hpp"

using namespace elplug;
using Catch::Approx;

namespace {

Observations column(std::vector<double> v) { return Observations::from_column(v); }

Observations normal_sample(std::uint64_t seed, std::size_t n, std::size_t d) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  Observations obs(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) obs(i, j) = nd(eng);
  return obs;
}

double stat_at(const EstimatingFamily& f, const Observations& data, double theta) {
  return el_statistic(f, data, Vector::Constant(1, theta)).statistic;
}

}  // namespace

TEST_CASE("v2_hat examples") {
  auto mean = mean_family(1);
  const auto data = column({-1.0, 1.0});
  mean->fit(data);
  CHECK(v2_hat(*mean, data, Vector::Zero(1))(0, 0) == Approx(1.0));
  const auto same = column({2.0, 2.0, 2.0});
  mean->fit(same);
  CHECK(v2_hat(*mean, same, Vector::Constant(1, 2.0)).norm() == 0.0);

  auto m2 = mean_family(2);
  const auto d2 = normal_sample(3, 50, 2);
  m2->fit(d2);
  const Vector th = *m2->point_estimate(d2);
  const Matrix v = v2_hat(*m2, d2, th);
  CHECK((v - v.transpose()).norm() == 0.0);
  Matrix direct = Matrix::Zero(2, 2);
  for (std::size_t i = 0; i < d2.size(); ++i) {
    const Eigen::Vector2d c(d2(i, 0) - th(0), d2(i, 1) - th(1));
    direct += c * c.transpose() / 50.0;
  }
  CHECK((v - direct).norm() <= 1e-12);
}

TEST_CASE("exhaustive bootstrap on two points") {
  auto mean = mean_family(1);
  const auto data = column({0.0, 1.0});
  mean->fit(data);
  BootstrapOptions opts;
  opts.exhaustive = true;
  opts.level = 0.5;
  const auto res = bootstrap_threshold(*mean, data, Vector::Constant(1, 0.5), opts);
  CHECK(res.v2(0, 0) == Approx(0.25));
  REQUIRE(res.law.samples.size() == 4);
  // Resample means 0, 1/2, 1/2, 1; n (M* - M)^2 / V2 = 2 (1/4) / (1/4).
  CHECK(res.law.samples[0] == Approx(0.0).margin(1e-15));
  CHECK(res.law.samples[1] == Approx(0.0).margin(1e-15));
  CHECK(res.law.samples[2] == Approx(2.0));
  CHECK(res.law.samples[3] == Approx(2.0));
  CHECK(res.threshold == Approx(0.0).margin(1e-15));
}

TEST_CASE("bootstrap rejects bad input") {
  auto mean = mean_family(1);
  const auto data = column({0.0, 1.0, 3.0});
  mean->fit(data);
  BootstrapOptions opts;
  opts.resamples = 0;
  CHECK_THROWS_AS(bootstrap_threshold(*mean, data, Vector::Constant(1, 4.0 / 3.0), opts), Error);
  auto dens = density_point_family(0.0);
  dens->fit(data);
  CHECK_THROWS_AS(bootstrap_threshold(*dens, data, Vector::Constant(1, 0.1)), Error);
  const auto same = column({1.0, 1.0, 1.0});
  mean->fit(same);
  try {
    bootstrap_threshold(*mean, same, Vector::Constant(1, 1.0));
    FAIL("expected SingularV2");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularV2);
  }
}

TEST_CASE("bootstrap is reproducible across thread counts") {
  auto f = regression_error_family(0.0);
  std::mt19937_64 eng(8);
  std::uniform_real_distribution<double> ud;
  std::normal_distribution<double> nd;
  Observations data(120, 2);
  for (std::size_t i = 0; i < 120; ++i) {
    data(i, 0) = ud(eng);
    data(i, 1) = std::sin(6.28 * data(i, 0)) + 0.5 * nd(eng);
  }
  f->fit(data);
  const Vector th = *f->point_estimate(data);
  BootstrapOptions a;
  a.resamples = 199;
  a.seed = 77;
  BootstrapOptions b = a;
  b.threads = 4;
  const auto ra = bootstrap_threshold(*f, data, th, a);
  const auto rb = bootstrap_threshold(*f, data, th, b);
  CHECK(ra.threshold == rb.threshold);
  CHECK(ra.law.samples == rb.law.samples);
  CHECK(std::is_sorted(ra.law.samples.begin(), ra.law.samples.end()));
  CHECK(ra.threshold == ra.law.samples[static_cast<std::size_t>(std::ceil(0.95 * 199)) - 1]);
  b.seed = 78;
  CHECK(bootstrap_threshold(*f, data, th, b).law.samples != ra.law.samples);
}

TEST_CASE("two-point mean interval matches the closed form") {
  auto mean = mean_family(1);
  const auto data = column({0.0, 1.0});
  mean->fit(data);
  const double c = law_quantile(ChiSquare{1}, 0.95);
  const auto ci = confidence_interval(*mean, data, c, 0.95);
  const double half = 0.5 * std::sqrt(1.0 - std::exp(-c / 2.0));
  CHECK(ci.lo == Approx(0.5 - half).margin(1e-6));
  CHECK(ci.hi == Approx(0.5 + half).margin(1e-6));
  CHECK(ci.lo == Approx(0.0380).margin(1e-3));
  CHECK(ci.hi == Approx(0.9620).margin(1e-3));
  CHECK(ci.contains(0.5));
  CHECK_FALSE(ci.contains(0.01));
}

TEST_CASE("interval invariants on random mean data") {
  auto mean = mean_family(1);
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto data = normal_sample(seed, 5 + seed * 3, 1);
    mean->fit(data);
    const auto xs = data.column(0);
    const double lo = *std::min_element(xs.begin(), xs.end());
    const double hi = *std::max_element(xs.begin(), xs.end());
    for (double c : {1.0, 3.8414588, 9.0}) {
      const auto ci = confidence_interval(*mean, data, c, 0.9);
      REQUIRE_FALSE(ci.empty);
      CHECK(ci.lo > lo);
      CHECK(ci.hi < hi);
      CHECK(ci.contains(ci.center));
      CHECK(std::abs(stat_at(*mean, data, ci.lo) - c) <= 1e-4 * c);
      CHECK(std::abs(stat_at(*mean, data, ci.hi) - c) <= 1e-4 * c);
      const double mid = 0.5 * (lo + hi);
      CHECK(ci.contains(mid) == (stat_at(*mean, data, mid) <= c));
    }
    const double mu = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    CHECK(interval_center(Evaluator(*mean, data)) == Approx(mu).margin(1e-8));
    const auto zero = confidence_interval(*mean, data, 0.0, 0.0);
    CHECK(zero.lo == Approx(mu).margin(1e-8));
    CHECK(zero.hi == Approx(mu).margin(1e-8));
  }
}

TEST_CASE("statistic curve matches pointwise evaluation") {
  auto mean = mean_family(1);
  const auto data = normal_sample(4, 30, 1);
  mean->fit(data);
  const auto curve = statistic_curve(*mean, data, -0.5, 0.5, 11);
  REQUIRE(curve.size() == 11);
  for (const auto& [theta, t] : curve) CHECK(t == Approx(stat_at(*mean, data, theta)).margin(1e-12));
  CHECK(curve.front().first == -0.5);
  CHECK(curve.back().first == Approx(0.5));
}

TEST_CASE("vector region membership agrees with the statistic") {
  auto mean = mean_family(2);
  const auto data = normal_sample(12, 40, 2);
  mean->fit(data);
  const double c = law_quantile(ChiSquare{2}, 0.9);
  const auto region = confidence_region(*mean, data, c, 0.9);
  std::mt19937_64 eng(2);
  std::normal_distribution<double> nd(0.0, 0.4);
  int inside = 0;
  for (int k = 0; k < 60; ++k) {
    const Vector th = Eigen::Vector2d(nd(eng), nd(eng));
    const bool in = region.contains(th);
    inside += in;
    CHECK(in == (el_statistic(*mean, data, th).statistic <= c));
  }
  CHECK(inside > 0);
  CHECK(region.contains(*mean->point_estimate(data)));
}

TEST_CASE("calibration kinds") {
  CHECK(parse_calibration("chisq") == CalibrationKind::ChiSquare);
  CHECK(parse_calibration("bootstrap") == CalibrationKind::Bootstrap);
  CHECK_THROWS_AS(parse_calibration("magic"), Error);

  auto sq = squared_density_family();
  const auto data = normal_sample(6, 400, 1);
  sq->fit(data);
  CalibrationSpec spec;
  const auto fam = calibrate_threshold(*sq, data, spec, 0.95);
  CHECK(fam.value == Approx(4.0 * 3.841458820694124).epsilon(1e-8));
  spec.kind = CalibrationKind::ChiSquare;
  CHECK(calibrate_threshold(*sq, data, spec, 0.95).value == Approx(3.841458820694124).epsilon(1e-8));
  spec.kind = CalibrationKind::Explicit;
  spec.law = ChiSquare{3};
  CHECK(calibrate_threshold(*sq, data, spec, 0.95).value == Approx(7.814727903251178).epsilon(1e-8));
  spec.law.reset();
  CHECK_THROWS_AS(calibrate_threshold(*sq, data, spec, 0.95), Error);
}
