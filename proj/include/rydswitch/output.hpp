#pragma once

#include "rydswitch/config.hpp"
#include "rydswitch/dynamics.hpp"
#include "rydswitch/sweeps.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace rydswitch::output {

// Version string written into every sidecar.
const char* version();

// Shortest representation that parses back to the same double.
std::string format_double(double x);

const std::vector<std::string>& sweep_columns();

void write_sweep_csv(std::ostream& os, const std::vector<sweeps::SweepRow>& rows);
std::vector<sweeps::SweepRow> read_sweep_csv(std::istream& is);

// t, Re a_c, Im a_c, sum |e|^2, sum |r|^2, |alpha_out|^2
void write_time_series_csv(std::ostream& os, const std::vector<dynamics::TimeSample>& series);

nlohmann::json sweep_metadata(const sweeps::SweepResult& result, const config::RunConfig& c,
                              int threads);

// Writes <dir>/<name>.csv and <dir>/<name>.json; returns the CSV path.
std::string emit_results(const sweeps::SweepResult& result, const config::RunConfig& c,
                         const std::string& dir, int threads);

void write_json(const std::string& path, const nlohmann::json& j);

} // namespace rydswitch::output
