#include "elplug/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "elplug/calibrate.hpp"
#include "elplug/el_statistic.hpp"
#include "elplug/error.hpp"
#include "elplug/growingp.hpp"
#include "elplug/io.hpp"
#include "elplug/simlab.hpp"

namespace elplug::cli {

namespace {

using json = nlohmann::ordered_json;

const std::map<std::string, Subcommand>& subcommands() {
  static const std::map<std::string, Subcommand> table{{"ci", Subcommand::Ci},
                                                       {"test", Subcommand::Test},
                                                       {"simulate", Subcommand::Simulate},
                                                       {"diagnose", Subcommand::Diagnose},
                                                       {"quantile", Subcommand::Quantile}};
  return table;
}

struct Parsed {
  std::string command;
  std::vector<std::string> params;
  std::string config_path;
};

std::unique_ptr<CLI::App> build_app(RunConfig& c, Parsed& raw) {
  auto app = std::make_unique<CLI::App>("Empirical likelihood inference with plug-in estimators", "elplug");
  app->add_option("command", raw.command, "ci | test | simulate | diagnose | quantile")->required();

  app->add_option("--family", c.family, "estimating family");
  app->add_option("--scenario", c.scenario, "simulation scenario");
  app->add_option("--data", c.data, "CSV file, one observation per row");
  app->add_option("--theta", c.theta, "parameter value for test / diagnose")->delimiter(',');
  app->add_option("--calibration", c.calibration, "chisq | family | bootstrap");
  app->add_option("--resamples", c.resamples, "bootstrap resamples B");
  app->add_option("--draws", c.draws, "Monte Carlo draws for weighted chi-square quantiles");
  app->add_option("--level,--alpha", c.level, "confidence level in (0, 1)");

  app->add_option("--n", c.n, "sample size for generated data");
  app->add_option("--p", c.p, "dimension");
  app->add_option("--reps", c.reps, "simulation replicates");
  app->add_option("--param", raw.params, "scenario parameter key=value (repeatable)");
  app->add_option("--mode", c.mode, "simulate mode: coverage | distribution");
  app->add_flag("--no-intervals", c.no_intervals, "simulate: score hits only, skip per-replicate intervals");

  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--threads", c.threads, "worker threads");
  app->add_option("--out", c.out, "output path prefix");
  app->add_option("--format", c.format, "stdout format: text | json");
  app->add_option("--config", raw.config_path, "flat JSON file of flag defaults");

  app->add_option("--x", c.x, "sym-cdf evaluation point");
  app->add_option("--t", c.t, "density-point / current-status time point");
  app->add_option("--z", c.z, "reg-error threshold");
  app->add_option("--bandwidth", c.bandwidth, "absolute bandwidth");
  app->add_option("--b0", c.b0, "bandwidth constant");
  app->add_option("--bw-exponent", c.bw_exponent, "sq-density bandwidth exponent");
  app->add_option("--kernel", c.kernel, "epanechnikov | gaussian");
  app->add_option("--density-floor", c.density_floor, "current-status lower bound on the check-time density");
  app->add_option("--xi", c.xi, "surv-functional weight: identity | indicator:<c>");
  app->add_option("--f0", c.f0, "basis reference law: uniform | normal");
  app->add_option("--focus", c.focus, "poly-reg focus points")->delimiter(',');

  app->add_option("--law", c.law, "quantile law: chisq | scaled | weighted");
  app->add_option("--c", c.c, "scale of the scaled chi-square law");
  app->add_option("--weights", c.weights, "weights of the weighted chi-square law")->delimiter(',');

  app->add_option("--grid-points", c.grid_points, "ci: rows in the plotting grid");

  app->add_option("--q", c.q, "diagnose: moment order");
  app->add_option("--epsilon", c.epsilon, "diagnose: L_n tail-bound epsilon");
  app->add_option("--c-q", c.c_q, "diagnose: tail-bound constant");
  return app;
}

[[noreturn]] void usage(const std::string& msg) { throw Error(ErrorKind::Usage, msg); }

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

std::string config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) usage("--config needs a file");
      return args[i + 1];
    }
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

std::string scalar_token(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return format_number(v.get<double>());
  usage("config key '" + key + "' has an unsupported value type");
}

// Config entries become flag tokens, skipped where the command line already has the flag.
std::vector<std::string> config_tokens(const std::string& path, const std::vector<std::string>& args,
                                       const CLI::App& app) {
  std::ifstream in(path);
  if (!in) usage("--config: cannot open '" + path + "'");
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    usage("--config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) usage("--config: '" + path + "' must hold a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = app.get_option_no_throw(flag);
    if (key == "config" || key == "command" || opt == nullptr) usage("--config: unknown key '" + key + "'");
    const auto names = opt->get_lnames();
    if (std::any_of(names.begin(), names.end(), [&](const std::string& l) { return flag_given(args, "--" + l); })) {
      continue;
    }
    if (key == "param") {
      if (!value.is_object()) usage("--config: 'param' must be an object of numbers");
      for (const auto& [k, v] : value.items()) {
        if (!v.is_number()) usage("--config: param '" + k + "' must be a number");
        tokens.push_back(flag);
        tokens.push_back(k + "=" + format_number(v.get<double>()));
      }
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
      continue;
    }
    if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) joined += (joined.empty() ? "" : ",") + scalar_token(item, key);
      tokens.push_back(flag);
      tokens.push_back(joined);
      continue;
    }
    tokens.push_back(flag);
    tokens.push_back(scalar_token(value, key));
  }
  return tokens;
}

void one_of(const std::string& flag, const std::string& value, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (value == a) return;
  }
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
  usage(flag + ": '" + value + "' is not one of " + list);
}

void validate(RunConfig& c, const Parsed& raw) {
  const auto it = subcommands().find(raw.command);
  if (it == subcommands().end()) usage("unknown subcommand '" + raw.command + "'");
  c.command = it->second;

  if (!(c.level > 0.0 && c.level < 1.0)) usage("--level must lie in (0, 1)");
  one_of("--calibration", c.calibration, {"chisq", "family", "law", "bootstrap"});
  one_of("--mode", c.mode, {"coverage", "distribution"});
  one_of("--format", c.format, {"text", "json"});
  one_of("--law", c.law, {"chisq", "scaled", "weighted"});
  if (c.threads == 0) usage("--threads must be at least 1");
  if (c.draws == 0) usage("--draws must be positive");
  if (c.resamples == 0) usage("--resamples must be positive");
  if (c.grid_points < 2) usage("--grid-points must be at least 2");
  if (c.kernel) {
    try {
      parse_kernel(*c.kernel);
    } catch (const Error& e) {
      usage(std::string("--kernel: ") + e.what());
    }
  }

  for (const auto& kv : raw.params) {
    const auto eq = kv.find('=');
    double v = 0.0;
    if (eq == std::string::npos || eq == 0) usage("--param expects key=value, got '" + kv + "'");
    try {
      std::size_t used = 0;
      v = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument(kv);
    } catch (const std::exception&) {
      usage("--param: '" + kv + "' does not have a numeric value");
    }
    c.params[kv.substr(0, eq)] = v;
  }

  const bool has_data = c.data.has_value();
  const bool has_scenario = c.scenario.has_value();
  switch (c.command) {
    case Subcommand::Ci:
    case Subcommand::Test:
    case Subcommand::Diagnose:
      if (has_data == has_scenario) usage("exactly one of --data and --scenario is required");
      if (has_data && !c.family && c.command != Subcommand::Diagnose) usage("--family is required with --data");
      break;
    case Subcommand::Simulate:
      if (!has_scenario || has_data) usage("simulate needs --scenario and no --data");
      break;
    case Subcommand::Quantile:
      if (has_data || has_scenario) usage("quantile takes neither --data nor --scenario");
      break;
  }
  if (c.command == Subcommand::Test && c.theta.empty()) usage("test needs --theta");
}

}  // namespace

std::string to_string(Subcommand cmd) {
  for (const auto& [name, value] : subcommands()) {
    if (value == cmd) return name;
  }
  return "?";
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig c;
  Parsed raw;
  auto app = build_app(c, raw);
  std::vector<std::string> tokens;
  const std::string cfg = config_path(args);
  if (!cfg.empty()) tokens = config_tokens(cfg, args, *app);
  tokens.insert(tokens.end(), args.begin(), args.end());
  std::reverse(tokens.begin(), tokens.end());
  try {
    app->parse(tokens);
  } catch (const CLI::ParseError& e) {
    usage(e.what());
  }
  validate(c, raw);
  return c;
}

RunConfig parse_config(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_config(args);
}

namespace {

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_json(v(i)));
  return out;
}

FamilyOptions family_options(const RunConfig& c, FamilyOptions o) {
  if (c.p) o.p = *c.p;
  if (c.x) o.x = *c.x;
  if (c.t) o.t = *c.t;
  if (c.z) o.z = *c.z;
  if (c.bandwidth) o.bandwidth = c.bandwidth;
  if (c.b0) o.b0 = c.b0;
  if (c.bw_exponent) o.alpha = c.bw_exponent;
  if (c.kernel) o.kernel = parse_kernel(*c.kernel);
  if (c.density_floor) o.density_floor = *c.density_floor;
  if (c.xi) o.xi = *c.xi;
  if (c.f0) o.f0 = *c.f0;
  if (!c.focus.empty()) o.focus = c.focus;
  return o;
}

Scenario scenario_of(const RunConfig& c) { return make_scenario(*c.scenario, c.n, c.p.value_or(1), c.params); }

struct Sample {
  Observations data;
  std::optional<Vector> theta_true;
  std::optional<Scenario> scenario;
  std::string family;
  FamilyOptions options;
};

Sample load_sample(const RunConfig& c) {
  Sample s;
  if (c.data) {
    s.data = read_csv(*c.data).data;
    s.family = c.family.value_or("mean");
    FamilyOptions base;
    if (!c.p && s.family == "mean") base.p = s.data.dim();
    s.options = family_options(c, base);
  } else {
    s.scenario = scenario_of(c);
    GeneratedData gen = generate(*s.scenario, c.seed, 0);
    s.data = std::move(gen.data);
    s.theta_true = std::move(gen.theta_true);
    s.family = c.family.value_or(default_family(s.scenario->name));
    s.options = family_options(c, default_family_options(*s.scenario));
  }
  if (s.data.empty()) throw Error(ErrorKind::EmptySample, "no observations");
  return s;
}

CalibrationSpec calibration_of(const RunConfig& c) {
  CalibrationSpec spec;
  spec.kind = parse_calibration(c.calibration);
  spec.resamples = c.resamples;
  spec.draws = c.draws;
  spec.seed = c.seed;
  spec.threads = c.threads;
  return spec;
}

json header(const RunConfig& c, const Sample& s, const EstimatingFamily& family) {
  json j;
  j["command"] = to_string(c.command);
  j["family"] = family.name();
  if (s.scenario) {
    j["scenario"] = s.scenario->name;
    j["seed"] = c.seed;
  } else {
    j["data"] = *c.data;
  }
  j["n"] = s.data.size();
  j["p"] = family.dim();
  if (s.theta_true) j["theta_true"] = vector_json(*s.theta_true);
  return j;
}

std::string out_path(const RunConfig& c, const std::string& suffix) { return *c.out + suffix; }

RunResult run_ci(const RunConfig& c) {
  Sample s = load_sample(c);
  auto family = make_family(s.family, s.options);
  if (family->theta_dim() != 1) usage("ci needs a scalar parameter; use test for " + family->name());
  family->fit(s.data);
  const Threshold thr = calibrate_threshold(*family, s.data, calibration_of(c), c.level);
  const ConfidenceInterval ci = confidence_interval(*family, s.data, thr.value, c.level);

  RunResult res;
  json& j = res.report;
  j = header(c, s, *family);
  j["level"] = c.level;
  j["calibration"] = to_string(calibration_of(c).kind);
  j["law"] = describe(thr.law);
  j["threshold"] = number_json(thr.value);
  j["center"] = number_json(ci.center);
  j["empty"] = ci.empty;
  j["lo"] = number_json(ci.lo);
  j["hi"] = number_json(ci.hi);
  j["lo_open"] = ci.lo_open;
  j["hi_open"] = ci.hi_open;
  j["width"] = number_json(ci.width());

  auto lambda_at = [&](double theta, bool open) -> json {
    if (ci.empty || open || !std::isfinite(theta)) return nullptr;
    const auto rep = el_statistic(*family, s.data, Vector::Constant(1, theta));
    return rep.solution.converged() ? vector_json(rep.solution.lambda_hat) : json(nullptr);
  };
  j["lambda_lo"] = lambda_at(ci.lo, ci.lo_open);
  j["lambda_hi"] = lambda_at(ci.hi, ci.hi_open);

  std::vector<std::pair<double, double>> grid;
  json curve = json::array();
  if (!ci.empty && std::isfinite(ci.lo) && std::isfinite(ci.hi)) {
    const double mid = 0.5 * (ci.lo + ci.hi);
    const double half = std::max(0.75 * ci.width(), 1e-6 * std::max(1.0, std::abs(mid)));
    grid = statistic_curve(*family, s.data, mid - half, mid + half, c.grid_points);
    const std::size_t samples = std::min<std::size_t>(grid.size(), 11);
    for (std::size_t k = 0; k < samples; ++k) {
      const auto& row = grid[k * (grid.size() - 1) / std::max<std::size_t>(samples - 1, 1)];
      curve.push_back(json::array({number_json(row.first), number_json(row.second)}));
    }
    const auto at_center = el_statistic(*family, s.data, Vector::Constant(1, ci.center));
    const auto pos = std::lower_bound(grid.begin(), grid.end(), ci.center,
                                      [](const auto& row, double v) { return row.first < v; });
    grid.insert(pos, {ci.center, at_center.statistic});
  }
  j["curve"] = curve;

  if (c.out) {
    std::ostringstream g;
    write_grid_csv(g, grid);
    res.files.push_back({out_path(c, "_grid.csv"), g.str()});
    res.files.push_back({out_path(c, ".json"), j.dump(2) + "\n"});
  }
  return res;
}

RunResult run_test(const RunConfig& c) {
  Sample s = load_sample(c);
  auto family = make_family(s.family, s.options);
  if (c.theta.size() != family->theta_dim()) {
    usage("--theta has " + std::to_string(c.theta.size()) + " values; " + family->name() + " needs " +
          std::to_string(family->theta_dim()));
  }
  family->fit(s.data);
  const Vector theta = Eigen::Map<const Vector>(c.theta.data(), static_cast<Eigen::Index>(c.theta.size()));
  const Threshold thr = calibrate_threshold(*family, s.data, calibration_of(c), c.level);
  const auto rep = el_statistic(*family, s.data, theta);
  if (rep.solution.status == SolveStatus::SingularSystem) {
    throw Error(ErrorKind::SingularSystem, "singular Newton system at the tested theta");
  }
  if (rep.solution.status == SolveStatus::MaxIterations) {
    throw Error(ErrorKind::MaxIterations, "dual solve did not converge at the tested theta");
  }

  RunResult res;
  json& j = res.report;
  j = header(c, s, *family);
  j["theta"] = vector_json(theta);
  j["level"] = c.level;
  j["calibration"] = to_string(calibration_of(c).kind);
  j["law"] = describe(thr.law);
  j["status"] = std::string(to_string(rep.solution.status));
  j["statistic"] = number_json(rep.statistic);
  j["a_n"] = rep.a_n;
  j["t_n"] = number_json(rep.solution.t_n);
  j["threshold"] = number_json(thr.value);
  j["p_value"] = number_json(law_pvalue(thr.law, rep.statistic, c.draws));
  j["reject"] = !(rep.statistic <= thr.value);
  j["lambda_hat"] = vector_json(rep.solution.lambda_hat);
  if (rep.quad) {
    j["t_star"] = number_json(rep.quad->t_star);
    j["lambda_star"] = vector_json(rep.quad->lambda_star);
  }
  if (rep.hull_checked) {
    j["hull_interior"] = rep.hull.origin_interior;
    j["hull_margin"] = number_json(rep.hull.margin);
  }
  if (c.out) res.files.push_back({out_path(c, ".json"), j.dump(2) + "\n"});
  return res;
}

std::optional<Matrix> known_sigma(const Scenario& s) {
  const auto p = static_cast<Eigen::Index>(s.p);
  if (s.name == "many-means" && s.params.at("marginal") != 2.0) return Matrix::Identity(p, p);
  if (s.name == "ortho-null") return Matrix::Identity(p, p);
  if (s.name == "poisson-reg") {
    return poisson_sigma(Vector::Constant(p, s.params.at("beta_norm") / std::sqrt(static_cast<double>(s.p))));
  }
  return std::nullopt;
}

RunResult run_diagnose(const RunConfig& c) {
  Sample s = load_sample(c);
  auto family = make_family(s.family, s.options);
  family->fit(s.data);
  Vector theta;
  if (!c.theta.empty()) {
    if (c.theta.size() != family->theta_dim()) usage("--theta does not match the parameter dimension");
    theta = Eigen::Map<const Vector>(c.theta.data(), static_cast<Eigen::Index>(c.theta.size()));
  } else if (s.theta_true) {
    theta = *s.theta_true;
  } else {
    const auto est = family->point_estimate(s.data);
    if (!est) throw Error(ErrorKind::NoRoot, family->name() + ": no point estimate; pass --theta");
    theta = *est;
  }
  const double n = static_cast<double>(s.data.size());
  const PointSet raw(family->evaluate_all(s.data, theta) / (family->scale(s.data.size()) * std::sqrt(n)));

  DiagnosticOptions opts;
  opts.q = c.q;
  opts.epsilon = c.epsilon;
  opts.c_q = c.c_q;
  if (s.scenario && s.family == default_family(s.scenario->name)) opts.sigma_n = known_sigma(*s.scenario);
  const DiagnosticsReport d = diagnostics(raw, opts);

  RunResult res;
  json& j = res.report;
  j = header(c, s, *family);
  j["theta"] = vector_json(theta);
  j["d_n"] = number_json(d.d_n);
  j["hull_checked"] = d.hull_checked;
  if (d.hull_checked) {
    j["hull_violation"] = !d.hull.origin_interior;
    j["hull_margin"] = number_json(d.hull.margin);
  }
  j["eig_min"] = number_json(d.eig_min);
  j["eig_max"] = number_json(d.eig_max);
  if (d.l_n) j["l_n"] = number_json(*d.l_n);
  if (d.sigma_eig_min) j["sigma_eig_min"] = number_json(*d.sigma_eig_min);
  if (d.sigma_eig_max) j["sigma_eig_max"] = number_json(*d.sigma_eig_max);
  if (d.eig_range_within_bound) j["eig_range_within_bound"] = *d.eig_range_within_bound;
  j["p3_over_n"] = number_json(d.growth.p3_over_n);
  j["plogp_over_n"] = number_json(d.growth.plogp_over_n);
  if (d.growth.moment_ratio) j["moment_ratio"] = number_json(*d.growth.moment_ratio);
  if (d.ln_tail_bound) j["ln_tail_bound"] = number_json(*d.ln_tail_bound);
  json flags;
  flags["d1"] = d.flags.d1;
  flags["d4"] = d.flags.d4;
  if (d.flags.d5) flags["d5"] = *d.flags.d5;
  flags["d6"] = d.flags.d6;
  j["flags"] = flags;
  j["eigenvalue_instability"] = !d.flags.d6;
  if (c.out) res.files.push_back({out_path(c, ".json"), j.dump(2) + "\n"});
  return res;
}

RunResult run_quantile(const RunConfig& c) {
  LimitLaw law;
  const int p = static_cast<int>(c.p.value_or(1));
  if (c.law == "chisq") law = ChiSquare{p};
  if (c.law == "scaled") law = ScaledChiSquare{c.c, p};
  if (c.law == "weighted") {
    if (c.weights.empty()) usage("--law weighted needs --weights");
    law = WeightedChiSquare{c.weights};
  }
  RunResult res;
  json& j = res.report;
  j["command"] = "quantile";
  j["law"] = describe(law);
  j["level"] = c.level;
  j["quantile"] = number_json(law_quantile(law, c.level, c.draws));
  if (c.out) res.files.push_back({out_path(c, ".json"), j.dump(2) + "\n"});
  return res;
}

RunResult run_simulate(const RunConfig& c) {
  StudyConfig study;
  study.scenario = scenario_of(c);
  study.family = c.family.value_or(default_family(study.scenario.name));
  study.family_options = family_options(c, default_family_options(study.scenario));
  study.calibration = calibration_of(c);
  study.level = c.level;
  study.reps = c.reps;
  study.seed = c.seed;
  study.threads = c.threads;
  study.intervals = !c.no_intervals;

  RunResult res;
  json& j = res.report;
  if (c.mode == "coverage") {
    const CoverageReport rep = coverage_study(study);
    j = summary_json(study, rep);
    if (c.out) {
      std::ostringstream csv;
      write_replicates_csv(csv, rep.records);
      res.files.push_back({out_path(c, ".csv"), csv.str()});
      res.files.push_back({out_path(c, ".json"), j.dump(2) + "\n"});
    }
    return res;
  }

  const DistributionReport rep = statistic_distribution(study);
  j["scenario"] = study.scenario.name;
  j["family"] = study.family;
  j["n"] = study.scenario.n;
  j["p"] = study.scenario.p;
  j["reps"] = study.reps;
  j["seed"] = study.seed;
  j["level"] = study.level;
  std::vector<double> ok;
  double sum = 0.0;
  for (std::size_t r = 0; r < rep.t_n.size(); ++r) {
    if (rep.status[r] == "ok") {
      ok.push_back(rep.t_n[r]);
      sum += rep.t_n[r];
    }
  }
  j["converged"] = ok.size();
  j["mean"] = ok.empty() ? json(nullptr) : number_json(sum / static_cast<double>(ok.size()));
  j["quantile"] = ok.empty() ? json(nullptr) : number_json(empirical_quantile(ok, study.level));
  json errors = json::object();
  for (const auto& [kind, count] : rep.errors) errors[kind] = count;
  j["errors"] = errors;
  if (c.out) {
    std::ostringstream csv;
    write_distribution_csv(csv, rep);
    res.files.push_back({out_path(c, ".csv"), csv.str()});
    res.files.push_back({out_path(c, ".json"), j.dump(2) + "\n"});
  }
  return res;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::UnknownFamily:
    case ErrorKind::UnknownScenario:
      return 2;
    default:
      return 1;
  }
}

std::string text_value(const json& v) {
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

RunResult run(const RunConfig& config) {
  try {
    switch (config.command) {
      case Subcommand::Ci: return run_ci(config);
      case Subcommand::Test: return run_test(config);
      case Subcommand::Simulate: return run_simulate(config);
      case Subcommand::Diagnose: return run_diagnose(config);
      case Subcommand::Quantile: return run_quantile(config);
    }
  } catch (const Error& e) {
    RunResult res;
    res.exit_code = exit_code_for(e.kind());
    res.report["command"] = to_string(config.command);
    res.report["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
    return res;
  }
  return {};
}

void emit_report(const RunResult& result, const RunConfig& config, std::ostream& out) {
  for (const auto& f : result.files) write_file(f.path, f.contents);
  if (config.format == "json") {
    out << result.report.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : result.report.items()) {
    if (key == "error") {
      out << "error: " << value.at("message").get<std::string>() << '\n';
    } else if (value.is_object() && !value.empty()) {
      for (const auto& [sub, v] : value.items()) out << key << '.' << sub << ": " << text_value(v) << '\n';
    } else {
      out << key << ": " << text_value(value) << '\n';
    }
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  if (args.empty() || flag_given(args, "--help") || flag_given(args, "-h")) {
    RunConfig c;
    Parsed raw;
    out << build_app(c, raw)->help();
    return args.empty() ? 2 : 0;
  }
  RunConfig config;
  try {
    config = parse_config(args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
  const RunResult result = run(config);
  try {
    emit_report(result, config, result.exit_code == 0 ? out : err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return result.exit_code;
}

}  // namespace elplug::cli
