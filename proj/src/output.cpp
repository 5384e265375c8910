#include "rydswitch/output.hpp"
#include "rydswitch/errors.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#ifndef RYDSWITCH_VERSION
#define RYDSWITCH_VERSION "0.0.0"
#endif

namespace rydswitch::output {

const char* version() { return RYDSWITCH_VERSION; }

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("csv: bad number '" + s + "'");
    return v;
}

template <class T>
T parse_integer(const std::string& s) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("csv: bad integer '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\n\"") != std::string::npos)
        throw ConfigError("csv: text field may not contain commas, quotes or newlines: " + s);
    return s;
}

} // namespace

const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols = {
        "curve",          "axis",          "value",
        "status",         "realized_bar",  "blockade_ratio",
        "alpha_factor",   "alpha_in_p_sq", "gamma_out",
        "gamma_r_bar",    "delta_small",   "p_ryd_deterministic",
        "im_probability", "im_stderr",     "efficiency",
        "efficiency_stderr", "mean_readout", "mean_readout_stderr",
        "stored_fraction", "n_traj",       "point_seed"};
    return cols;
}

void write_sweep_csv(std::ostream& os, const std::vector<sweeps::SweepRow>& rows) {
    const auto& cols = sweep_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& r : rows) {
        os << csv_text(r.curve) << ',' << csv_text(r.axis) << ',' << format_double(r.value) << ','
           << csv_text(r.status) << ',' << format_double(r.realized_bar) << ','
           << format_double(r.blockade_ratio) << ',' << format_double(r.alpha_factor) << ','
           << format_double(r.alpha_in_p_sq) << ',' << format_double(r.gamma_out) << ','
           << format_double(r.gamma_r_bar) << ',' << format_double(r.delta_small) << ','
           << format_double(r.p_ryd_deterministic) << ',' << format_double(r.im_probability)
           << ',' << format_double(r.im_stderr) << ',' << format_double(r.efficiency) << ','
           << format_double(r.efficiency_stderr) << ',' << format_double(r.mean_readout) << ','
           << format_double(r.mean_readout_stderr) << ',' << format_double(r.stored_fraction)
           << ',' << r.n_traj << ',' << r.point_seed << '\n';
    }
}

std::vector<sweeps::SweepRow> read_sweep_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
        throw ConfigError("csv: missing header");
    const auto header = split(line);
    if (header != sweep_columns())
        throw ConfigError("csv: unexpected header");
    std::vector<sweeps::SweepRow> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto f = split(line);
        if (f.size() != header.size())
            throw ConfigError("csv: wrong field count in '" + line + "'");
        sweeps::SweepRow r;
        std::size_t i = 0;
        r.curve = f[i++];
        r.axis = f[i++];
        r.value = parse_double(f[i++]);
        r.status = f[i++];
        r.realized_bar = parse_double(f[i++]);
        r.blockade_ratio = parse_double(f[i++]);
        r.alpha_factor = parse_double(f[i++]);
        r.alpha_in_p_sq = parse_double(f[i++]);
        r.gamma_out = parse_double(f[i++]);
        r.gamma_r_bar = parse_double(f[i++]);
        r.delta_small = parse_double(f[i++]);
        r.p_ryd_deterministic = parse_double(f[i++]);
        r.im_probability = parse_double(f[i++]);
        r.im_stderr = parse_double(f[i++]);
        r.efficiency = parse_double(f[i++]);
        r.efficiency_stderr = parse_double(f[i++]);
        r.mean_readout = parse_double(f[i++]);
        r.mean_readout_stderr = parse_double(f[i++]);
        r.stored_fraction = parse_double(f[i++]);
        r.n_traj = parse_integer<int>(f[i++]);
        r.point_seed = parse_integer<std::uint64_t>(f[i++]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_time_series_csv(std::ostream& os, const std::vector<dynamics::TimeSample>& series) {
    os << "t,re_a_c,im_a_c,excited,rydberg,output2\n";
    for (const auto& s : series)
        os << format_double(s.t) << ',' << format_double(s.cavity.real()) << ','
           << format_double(s.cavity.imag()) << ',' << format_double(s.excited) << ','
           << format_double(s.rydberg) << ',' << format_double(s.output2) << '\n';
}

nlohmann::json sweep_metadata(const sweeps::SweepResult& result, const config::RunConfig& c,
                              int threads) {
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& r = result.rows[i];
        points.push_back({{"curve", r.curve},
                          {"value", r.value},
                          {"status", r.status},
                          {"point_seed", r.point_seed},
                          {"wall_seconds", i < result.wall_seconds.size()
                                               ? result.wall_seconds[i]
                                               : 0.0}});
    }
    const double total = std::accumulate(result.wall_seconds.begin(), result.wall_seconds.end(), 0.0);
    std::ostringstream hash;
    hash << std::hex << config::config_hash(c);
    return {{"name", result.name},
            {"kind", result.kind},
            {"version", version()},
            {"config_hash", hash.str()},
            {"base_seed", c.base_seed},
            {"ensemble_seed", c.ensemble.seed},
            {"threads", threads},
            {"columns", sweep_columns()},
            {"wall_seconds", total},
            {"points", points},
            {"notes", result.notes},
            {"settings", result.settings},
            {"config", config::to_json(c)}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream f(path);
    if (!f)
        throw ConfigError("cannot write '" + path + "'");
    f << j.dump(2) << '\n';
}

std::string emit_results(const sweeps::SweepResult& result, const config::RunConfig& c,
                         const std::string& dir, int threads) {
    std::filesystem::create_directories(dir);
    const std::string stem = (std::filesystem::path(dir) / result.name).string();
    const std::string csv = stem + ".csv";
    {
        std::ofstream f(csv);
        if (!f)
            throw ConfigError("cannot write '" + csv + "'");
        write_sweep_csv(f, result.rows);
    }
    write_json(stem + ".json", sweep_metadata(result, c, threads));
    return csv;
}

} // namespace rydswitch::output
