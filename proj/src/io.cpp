#include "elplug/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "elplug/error.hpp"

namespace elplug {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size(); ++j) numeric = numeric && parse_double(fields[j], row[j]);
    if (!numeric) {
      if (rows.empty() && table.header.empty()) {
        table.header = fields;
        width = fields.size();
        continue;
      }
      throw Error(ErrorKind::Io, source + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw Error(ErrorKind::Io, source + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                     " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw Error(ErrorKind::Io, source + ": read failed");
  Observations obs(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) obs(i, j) = rows[i][j];
  }
  table.data = std::move(obs);
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, path + ": cannot open for reading");
  return parse_csv(in, path);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRecord>& records) {
  out << "replicate,statistic,t_star,hit,lo,hi,status\n";
  for (const auto& r : records) {
    out << r.replicate << ',' << format_number(r.statistic) << ',' << format_number(r.t_star) << ','
        << (r.hit ? 1 : 0) << ',' << format_number(r.lo) << ',' << format_number(r.hi) << ',' << r.status << '\n';
  }
}

void write_distribution_csv(std::ostream& out, const DistributionReport& report) {
  out << "replicate,t_n,t_star,status\n";
  for (std::size_t r = 0; r < report.t_n.size(); ++r) {
    out << r << ',' << format_number(report.t_n[r]) << ',' << format_number(report.t_star[r]) << ','
        << report.status[r] << '\n';
  }
}

void write_grid_csv(std::ostream& out, const std::vector<std::pair<double, double>>& grid) {
  out << "theta,t_n\n";
  for (const auto& [theta, t] : grid) out << format_number(theta) << ',' << format_number(t) << '\n';
}

nlohmann::ordered_json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

nlohmann::ordered_json summary_json(const StudyConfig& config, const CoverageReport& report) {
  nlohmann::ordered_json j;
  j["scenario"] = config.scenario.name;
  j["family"] = config.family;
  j["calibration"] = to_string(config.calibration.kind);
  j["n"] = config.scenario.n;
  j["p"] = config.scenario.p;
  j["reps"] = report.reps;
  j["seed"] = config.seed;
  j["level"] = config.level;
  j["hits"] = report.hits;
  j["coverage"] = number_json(report.coverage);
  j["mean_width"] = number_json(report.mean_width);
  j["median_width"] = number_json(report.median_width);
  nlohmann::ordered_json errors = nlohmann::ordered_json::object();
  for (const auto& [kind, count] : report.errors) errors[kind] = count;
  j["errors"] = errors;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config.scenario.params) params[key] = number_json(value);
  j["params"] = params;
  return j;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, path + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, path + ": write failed");
}

}  // namespace elplug
