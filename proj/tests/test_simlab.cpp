#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "elplug/error.hpp"
#include "elplug/simlab.hpp"

using namespace elplug;
using Catch::Approx;

namespace {

std::size_t dim_for(const std::string& name) {
  return (name == "many-means" || name == "ortho-null" || name == "poisson-reg") ? 3 : 2;
}

}  // namespace

TEST_CASE("scenario registry validates names and keys") {
  CHECK(scenario_names().size() == 10);
  for (const auto& name : scenario_names()) {
    const auto sc = make_scenario(name, 50, dim_for(name));
    CHECK(sc.params.size() == scenario_params(name).size());
    CHECK_NOTHROW(make_family(default_family(name), default_family_options(sc)));
  }
  try {
    make_scenario("nope", 10, 1);
    FAIL("expected UnknownScenario");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownScenario);
  }
  CHECK_THROWS_AS(make_scenario("sym-cdf", 10, 1, {{"bogus", 1.0}}), Error);
  CHECK(make_scenario("sym-cdf", 10, 1, {{"x", 0.2}}).params.at("x") == 0.2);
}

TEST_CASE("generation is deterministic per replicate") {
  for (const auto& name : scenario_names()) {
    const auto sc = make_scenario(name, 40, dim_for(name));
    const auto a = generate(sc, 7, 3);
    const auto b = generate(sc, 7, 3);
    const auto c = generate(sc, 7, 4);
    INFO(name);
    CHECK(a.data.values() == b.data.values());
    CHECK(a.theta_true == b.theta_true);
    CHECK(a.data.values() != c.data.values());
    CHECK(a.data.size() == 40);
  }
}

TEST_CASE("point estimates approach the scenario truth at large n") {
  // Loose for the smoothed families, whose estimates carry O(b^2) bias.
  const std::map<std::string, double> tol{{"many-means", 0.02},  {"poisson-reg", 0.03}, {"ortho-null", 0.02},
                                          {"poly-reg", 0.03},    {"sym-cdf", 0.01},     {"sq-density", 0.01},
                                          {"surv", 0.03},        {"reg-error", 0.02},   {"density-point", 0.02},
                                          {"current-status", 0.03}};
  for (const auto& name : scenario_names()) {
    const auto sc = make_scenario(name, 40000, dim_for(name));
    const auto gen = generate(sc, 2026, 0);
    auto f = make_family(default_family(name), default_family_options(sc));
    f->fit(gen.data);
    const auto est = f->point_estimate(gen.data);
    REQUIRE(est);
    INFO(name << " estimate " << est->transpose() << " truth " << gen.theta_true.transpose());
    if (est->size() != gen.theta_true.size()) continue;
    CHECK((*est - gen.theta_true).cwiseAbs().maxCoeff() < tol.at(name));
  }
}

TEST_CASE("closed-form truths") {
  const auto surv = generate(make_scenario("surv", 10, 1), 1, 0);
  CHECK(surv.theta_true(0) == Approx(1.0 - 4.0 * std::exp(-3.0)));
  const auto cs = generate(make_scenario("current-status", 10, 1, {{"t", 0.5}}), 1, 0);
  CHECK(cs.theta_true(0) == Approx(std::exp(-0.5)));
  const auto sq = generate(make_scenario("sq-density", 10, 1, {{"sd", 2.0}}), 1, 0);
  CHECK(sq.theta_true(0) == Approx(1.0 / (2.0 * std::sqrt(3.141592653589793) * 2.0)));
  const auto re = generate(make_scenario("reg-error", 10, 1), 1, 0);
  CHECK(re.theta_true(0) == Approx(0.5));
}

TEST_CASE("coverage study is invariant to thread count") {
  StudyConfig cfg;
  cfg.scenario = make_scenario("many-means", 60, 1);
  cfg.family = default_family("many-means");
  cfg.family_options = default_family_options(cfg.scenario);
  cfg.calibration.kind = CalibrationKind::ChiSquare;
  cfg.reps = 40;
  cfg.seed = 5;
  const auto a = coverage_study(cfg);
  cfg.threads = 4;
  const auto b = coverage_study(cfg);
  REQUIRE(a.records.size() == 40);
  CHECK(a.hits == b.hits);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(a.records[i].statistic == b.records[i].statistic);
    CHECK(a.records[i].lo == b.records[i].lo);
    CHECK(a.records[i].hi == b.records[i].hi);
    CHECK(a.records[i].hit == (a.records[i].statistic <= a.records[i].threshold));
    if (a.records[i].status == "ok") {
      CHECK(a.records[i].hit == (a.records[i].lo <= 0.0 && 0.0 <= a.records[i].hi));
    }
  }
  CHECK(a.coverage == Approx(static_cast<double>(a.hits) / 40.0));
  CHECK(a.mean_width > 0.0);
}

TEST_CASE("distribution mode and bootstrap replicates") {
  StudyConfig cfg;
  cfg.scenario = make_scenario("many-means", 80, 2);
  cfg.family = "mean";
  cfg.family_options = default_family_options(cfg.scenario);
  cfg.reps = 30;
  const auto d = statistic_distribution(cfg);
  CHECK(d.t_n.size() == 30);
  CHECK(d.errors.empty());
  for (std::size_t i = 0; i < 30; ++i) CHECK(d.t_n[i] >= 0.0);

  StudyConfig bs;
  bs.scenario = make_scenario("reg-error", 60, 1);
  bs.family = default_family("reg-error");
  bs.family_options = default_family_options(bs.scenario);
  bs.calibration.kind = CalibrationKind::Bootstrap;
  bs.calibration.resamples = 49;
  bs.reps = 4;
  bs.intervals = false;
  const auto r = coverage_study(bs);
  CHECK(r.records.size() == 4);
  for (const auto& rec : r.records) CHECK(rec.threshold > 0.0);
}

TEST_CASE("empirical quantile") {
  CHECK(empirical_quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == 2.0);
  CHECK(empirical_quantile({3.0, 1.0, 2.0, 4.0}, 0.51) == 3.0);
  CHECK(empirical_quantile({3.0, 1.0, NAN, 4.0}, 0.99) == 4.0);
  CHECK_THROWS_AS(empirical_quantile({1.0}, 1.0), Error);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), Error);
}
