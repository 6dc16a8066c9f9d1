#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace elplug::cli {

enum class Subcommand { Ci, Test, Simulate, Diagnose, Quantile };

std::string to_string(Subcommand cmd);

struct RunConfig {
  Subcommand command = Subcommand::Ci;
  std::optional<std::string> family;
  std::optional<std::string> scenario;
  std::optional<std::string> data;
  std::vector<double> theta;
  std::string calibration = "family";
  std::size_t resamples = 999;
  std::size_t draws = 200000;
  double level = 0.95;

  // simulate, and ci/test/diagnose on a generated sample
  std::size_t n = 200;
  std::optional<std::size_t> p;
  std::size_t reps = 100;
  std::map<std::string, double> params;
  std::string mode = "coverage";  // coverage | distribution
  bool no_intervals = false;

  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::optional<std::string> out;
  std::string format = "text";  // text | json

  // family options
  std::optional<double> x;
  std::optional<double> t;
  std::optional<double> z;
  std::optional<double> bandwidth;
  std::optional<double> b0;
  std::optional<double> bw_exponent;
  std::optional<std::string> kernel;
  std::optional<double> density_floor;
  std::optional<std::string> xi;
  std::optional<std::string> f0;
  std::vector<double> focus;

  // quantile
  std::string law = "chisq";  // chisq | scaled | weighted
  double c = 1.0;
  std::vector<double> weights;

  // ci grid
  std::size_t grid_points = 201;

  // diagnose
  std::optional<double> q;
  double epsilon = 0.1;
  double c_q = 1.0;
};

/// Parses argv (argv[0] is the program name). A `--config FILE` holding a flat
/// JSON object supplies defaults keyed by long flag name; command-line flags
/// win. Throws Error(Usage) naming the offending flag or key.
RunConfig parse_config(int argc, const char* const* argv);
RunConfig parse_config(const std::vector<std::string>& args);

struct OutputFile {
  std::string path;
  std::string contents;
};

struct RunResult {
  int exit_code = 0;
  nlohmann::ordered_json report;
  /// Files requested through --out; written by emit_report.
  std::vector<OutputFile> files;
};

/// Executes the subcommand. Library errors are caught and reported under
/// "error" with their kind; exit code 1 for numerical failures, 2 for usage.
RunResult run(const RunConfig& config);

/// Writes the --out files and renders the report to `out` in the configured format.
void emit_report(const RunResult& result, const RunConfig& config, std::ostream& out);

/// Full entry point: parse, run, emit. Returns the exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace elplug::cli
