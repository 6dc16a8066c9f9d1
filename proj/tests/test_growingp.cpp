#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "elplug/error.hpp"
#include "elplug/growingp.hpp"
#include "elplug/simlab.hpp"

using namespace elplug;
using Catch::Approx;

namespace {

Matrix normal_rows(std::uint64_t seed, int n, int p) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  Matrix x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = nd(eng);
  return x;
}

}  // namespace

TEST_CASE("diagnostics examples") {
  Matrix x(2, 2);
  x << 3, 4, 0, 1;
  const auto rep = diagnostics(PointSet(x));
  CHECK(rep.d_n == Approx(5.0));
  CHECK(rep.n == 2);
  CHECK(rep.p == 2);
  CHECK(rep.growth.p3_over_n == Approx(4.0));
  CHECK(rep.growth.plogp_over_n == Approx(std::log(2.0)));
  CHECK_FALSE(rep.l_n.has_value());

  const Matrix s = x.transpose() * x / 2.0;
  DiagnosticOptions o;
  o.sigma_n = s;
  const auto exact = diagnostics(PointSet(x), o);
  REQUIRE(exact.l_n);
  CHECK(*exact.l_n == Approx(0.0).margin(1e-15));
  REQUIRE(exact.eig_range_within_bound);
  CHECK(*exact.eig_range_within_bound);

  o.sigma_n = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(diagnostics(PointSet(x), o), Error);
}

TEST_CASE("diagnostics on a seeded normal sample") {
  const Matrix x = normal_rows(500, 500, 2);
  DiagnosticOptions o;
  o.sigma_n = Matrix::Identity(2, 2);
  o.q = 6.0;
  const auto rep = diagnostics(PointSet(x), o);
  const Matrix s = x.transpose() * x / 500.0;
  const Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  CHECK(rep.eig_min == Approx(es.eigenvalues()(0)).epsilon(1e-12));
  CHECK(rep.eig_max == Approx(es.eigenvalues()(1)).epsilon(1e-12));
  CHECK(*rep.l_n == Approx((s - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff()).epsilon(1e-12));
  CHECK(std::abs(rep.eig_min - 1.0) <= 2.0 * *rep.l_n);
  CHECK(std::abs(rep.eig_max - 1.0) <= 2.0 * *rep.l_n);
  CHECK(*rep.eig_range_within_bound);
  REQUIRE(rep.growth.moment_ratio);
  CHECK(*rep.growth.moment_ratio == Approx(std::pow(2.0, 3.0 + 6.0 / 4.0) / 500.0));
  CHECK(rep.ln_tail_bound.has_value());
  CHECK(rep.hull_checked);
  CHECK(rep.hull.origin_interior);
  CHECK(rep.d_n == Approx(x.rowwise().norm().maxCoeff()));
  CHECK(rep.eig_min <= rep.eig_max);
}

TEST_CASE("diagnostics flags follow the gates") {
  const Matrix x = normal_rows(3, 2000, 2);
  DiagnosticOptions o;
  o.sigma_n = Matrix::Identity(2, 2);
  const auto good = diagnostics(PointSet(x), o);
  CHECK(good.flags.d4);
  CHECK(good.flags.d6);
  CHECK(good.flags.d1 == (2.0 * good.d_n / std::sqrt(2000.0) <= o.gates.d1));
  o.gates.d4_eig_max = 0.5;
  CHECK_FALSE(diagnostics(PointSet(x), o).flags.d4);
  // Without sigma_n the eigenvalue proxy falls back to S_n.
  const auto scaled = diagnostics(PointSet(Matrix(x * 10.0)));
  CHECK_FALSE(scaled.flags.d6);
}

TEST_CASE("dual gap study") {
  auto sc = make_scenario("many-means", 2000, 3);
  const auto study = dual_gap_study(sc, 200, 5);
  CHECK(study.samples.size() == 200);
  CHECK(study.hull_violations == 0);
  CHECK(study.mean_abs_gap < 0.05);
  // Symmetric point-mass data: U = 0 so both statistics vanish.
  auto pm = make_scenario("many-means", 50, 1, {{"marginal", 2.0}});
  const auto deg = dual_gap_study(pm, 5, 1);
  for (const auto& s : deg.samples) CHECK(s.t_n == Approx(s.t_star).margin(1e-12));
  // n = p: the hull is degenerate for almost every draw.
  auto tight = make_scenario("many-means", 5, 5);
  const auto hv = dual_gap_study(tight, 40, 2);
  CHECK(hv.hull_violations + hv.other_failures >= 36);
}

TEST_CASE("dual gap study is reproducible across threads") {
  auto sc = make_scenario("many-means", 300, 4);
  const auto a = dual_gap_study(sc, 30, 11, 1);
  const auto b = dual_gap_study(sc, 30, 11, 3);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].t_n == b.samples[i].t_n);
    CHECK(a.samples[i].t_star == b.samples[i].t_star);
  }
}

TEST_CASE("normality check standardizes") {
  std::mt19937_64 eng(1);
  std::chi_squared_distribution<double> cd(40.0);
  std::vector<double> t(20000);
  for (auto& v : t) v = cd(eng);
  const auto nc = normality_check(t, 40);
  CHECK(nc.z_mean == Approx(0.0).margin(0.03));
  CHECK(nc.z_var == Approx(1.0).margin(0.05));
  CHECK(nc.ks_stat < 0.05);
  const std::vector<double> fixed{1.0, 3.0};
  const auto two = normality_check(fixed, 2);
  CHECK(two.z_mean == Approx(0.0).margin(1e-15));
}
