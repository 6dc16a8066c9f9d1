#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "elplug/simlab.hpp"
#include "elplug/types.hpp"

namespace elplug {

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has none
  Observations data;
};

/// Numeric CSV, one observation per row. A first row containing any
/// non-numeric field is taken as the header. Throws Io with the path and line.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");

/// %.17g, with nan/inf/-inf spelled out.
std::string format_number(double v);

/// `replicate,statistic,t_star,hit,lo,hi,status`
void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRecord>& records);
void write_distribution_csv(std::ostream& out, const DistributionReport& report);
/// Two columns `theta,t_n`.
void write_grid_csv(std::ostream& out, const std::vector<std::pair<double, double>>& grid);

/// Non-finite numbers become the strings "nan", "inf", "-inf".
nlohmann::ordered_json number_json(double v);

nlohmann::ordered_json summary_json(const StudyConfig& config, const CoverageReport& report);

/// Writes `text` to `path`, throwing Io naming the path on failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace elplug
