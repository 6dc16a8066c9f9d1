#include "elplug/growingp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "elplug/error.hpp"
#include "elplug/parallel.hpp"
#include "elplug/simlab.hpp"

namespace elplug {

DiagnosticsReport diagnostics(const PointSet& raw_points, const DiagnosticOptions& opts) {
  const Matrix& x = raw_points.points();
  DiagnosticsReport rep;
  rep.n = raw_points.n();
  rep.p = raw_points.p();
  const double n = static_cast<double>(rep.n);
  const double p = static_cast<double>(rep.p);
  rep.d_n = raw_points.max_norm();

  if (rep.p <= opts.hull_max_p) {
    rep.hull = check_hull(raw_points);
    rep.hull_checked = true;
  }

  const Matrix s_n = x.transpose() * x / n;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s_n, Eigen::EigenvaluesOnly);
  rep.eig_min = es.eigenvalues().minCoeff();
  rep.eig_max = es.eigenvalues().maxCoeff();

  if (opts.sigma_n) {
    const Matrix& sigma = *opts.sigma_n;
    if (sigma.rows() != x.cols() || sigma.cols() != x.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "sigma_n must be p x p");
    }
    rep.l_n = (s_n - sigma).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> ss(0.5 * (sigma + sigma.transpose()), Eigen::EigenvaluesOnly);
    rep.sigma_eig_min = ss.eigenvalues().minCoeff();
    rep.sigma_eig_max = ss.eigenvalues().maxCoeff();
    const double slack = p * *rep.l_n * (1.0 + 1e-12) + 1e-12;
    rep.eig_range_within_bound =
        std::abs(rep.eig_min - *rep.sigma_eig_min) <= slack && std::abs(rep.eig_max - *rep.sigma_eig_max) <= slack;
  }

  rep.growth.p3_over_n = p * p * p / n;
  rep.growth.plogp_over_n = p * std::log(p) / n;
  if (opts.q && *opts.q > 2.0) rep.growth.moment_ratio = std::pow(p, 3.0 + 6.0 / (*opts.q - 2.0)) / n;
  if (opts.q) {
    const double q = *opts.q;
    // A_n(p, q) from sample moments.
    const double a = x.array().abs().pow(q).colwise().mean().sum() / p;
    rep.ln_tail_bound = opts.c_q * p * p * a * a / (std::pow(opts.epsilon, q) * std::pow(n, q / 2.0));
  }

  const auto& g = opts.gates;
  rep.flags.d1 = p * rep.d_n / std::sqrt(n) <= g.d1;
  rep.flags.d4 = rep.eig_max <= g.d4_eig_max;
  if (rep.l_n) rep.flags.d5 = std::pow(p, 1.5) * *rep.l_n <= g.d5;
  const double lo = rep.sigma_eig_min.value_or(rep.eig_min);
  const double hi = rep.sigma_eig_max.value_or(rep.eig_max);
  rep.flags.d6 = lo >= g.d6_eig_min && hi <= g.d6_eig_max;
  return rep;
}

GapStudy dual_gap_study(const Scenario& scenario, std::size_t reps, std::uint64_t seed, std::size_t threads) {
  const FamilyOptions fopts = default_family_options(scenario);
  const std::string fname = default_family(scenario.name);
  GapStudy study;
  study.samples.resize(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    const GeneratedData gen = generate(scenario, seed, r);
    auto family = make_family(fname, fopts);
    family->fit(gen.data);
    const Matrix raw = family->evaluate_all(gen.data, gen.theta_true) / family->scale(gen.data.size());
    const PointSet ps(raw / std::sqrt(static_cast<double>(gen.data.size())));
    GapSample s;
    const ELSolution sol = solve_dual(ps);
    s.status = sol.status;
    s.t_n = sol.t_n;
    const auto quad = try_quadratic_stat(ps);
    if (quad) {
      s.t_star = quad->t_star;
    } else {
      // Singular V_n: T* is still 0 when U_n vanishes.
      const bool u_zero = (ps.points().transpose() * ps.weights()).isZero(0.0);
      s.t_star = u_zero ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    }
    study.samples[r] = s;
  });

  const double root_p = std::sqrt(static_cast<double>(scenario.p));
  std::size_t used = 0;
  for (const auto& s : study.samples) {
    if (s.status == SolveStatus::HullViolation) {
      ++study.hull_violations;
    } else if (s.status != SolveStatus::Converged || std::isnan(s.t_star)) {
      ++study.other_failures;
    } else {
      study.mean_abs_gap += std::abs(s.t_n - s.t_star) / root_p;
      study.mean_gap += (s.t_n - s.t_star) / root_p;
      ++used;
    }
  }
  if (used > 0) {
    study.mean_abs_gap /= static_cast<double>(used);
    study.mean_gap /= static_cast<double>(used);
  }
  return study;
}

NormalityCheck normality_check(const std::vector<double>& t_samples, std::size_t p) {
  if (t_samples.empty()) throw Error(ErrorKind::EmptySample, "normality check needs samples");
  if (p == 0) throw Error(ErrorKind::InvalidArgument, "p must be positive");
  const double sd = std::sqrt(2.0 * static_cast<double>(p));
  std::vector<double> z(t_samples.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (t_samples[i] - static_cast<double>(p)) / sd;
  const double m = static_cast<double>(z.size());

  NormalityCheck out;
  for (double v : z) out.z_mean += v;
  out.z_mean /= m;
  if (z.size() > 1) {
    for (double v : z) out.z_var += (v - out.z_mean) * (v - out.z_mean);
    out.z_var /= m - 1.0;
  }
  std::sort(z.begin(), z.end());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double phi = 0.5 * std::erfc(-z[i] / std::numbers::sqrt2);
    out.ks_stat = std::max({out.ks_stat, static_cast<double>(i + 1) / m - phi, phi - static_cast<double>(i) / m});
  }
  return out;
}

}  // namespace elplug
