#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elplug/calibrate.hpp"
#include "elplug/estfun.hpp"
#include "elplug/types.hpp"

namespace elplug {

/// Data-generating design. `params` holds the distributional knobs; each
/// scenario accepts only its own keys (see scenario_params).
struct Scenario {
  std::string name;
  std::size_t n = 100;
  std::size_t p = 1;
  std::map<std::string, double> params;
};

struct GeneratedData {
  Observations data;
  Vector theta_true;
};

const std::vector<std::string>& scenario_names();
/// Accepted parameter keys with their defaults.
const std::map<std::string, double>& scenario_params(const std::string& name);

/// Validates the name and keys; fills in defaults.
Scenario make_scenario(const std::string& name, std::size_t n, std::size_t p,
                       const std::map<std::string, double>& params = {});

/// Deterministic in (scenario, seed, replicate).
GeneratedData generate(const Scenario& scenario, std::uint64_t seed, std::uint64_t replicate);

/// Family whose estimating equation targets the scenario's true parameter.
std::string default_family(const std::string& scenario);
FamilyOptions default_family_options(const Scenario& scenario);

struct StudyConfig {
  Scenario scenario;
  std::string family;
  FamilyOptions family_options;
  CalibrationSpec calibration;
  double level = 0.95;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Build a confidence interval per replicate (scalar parameters only).
  bool intervals = true;
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  double statistic = 0.0;  // t_n(theta_true) / a_n
  double t_star = 0.0;
  double threshold = 0.0;
  bool hit = false;
  double lo = 0.0;
  double hi = 0.0;
  std::string status;  // "ok" or an error kind
};

struct CoverageReport {
  std::size_t reps = 0;
  std::size_t hits = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
  double median_width = 0.0;
  std::map<std::string, std::size_t> errors;
  std::vector<ReplicateRecord> records;
  double wall_seconds = 0.0;
};

CoverageReport coverage_study(const StudyConfig& config);

struct DistributionReport {
  std::vector<double> t_n;
  std::vector<double> t_star;
  std::vector<std::string> status;
  std::map<std::string, std::size_t> errors;
};

/// Null statistic t_n(theta) / a_n per replicate; theta defaults to the scenario truth.
DistributionReport statistic_distribution(const StudyConfig& config, std::optional<Vector> theta = std::nullopt);

/// Empirical quantile (ceil(level * m)-th order statistic) of finite samples.
double empirical_quantile(std::vector<double> samples, double level);

}  // namespace elplug
