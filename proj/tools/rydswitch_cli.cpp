// Command-line driver: ensemble, analytics, trajectory, im-sweep,
// efficiency-sweep and oracle subcommands.

#include "rydswitch/analytics.hpp"
#include "rydswitch/channels.hpp"
#include "rydswitch/config.hpp"
#include "rydswitch/dynamics.hpp"
#include "rydswitch/ensemble.hpp"
#include "rydswitch/errors.hpp"
#include "rydswitch/oracle.hpp"
#include "rydswitch/output.hpp"
#include "rydswitch/presets.hpp"
#include "rydswitch/sweeps.hpp"
#include "rydswitch/trajectories.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

using namespace rydswitch;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_traj;
    std::optional<double> scale;
    std::string out = ".";
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string curve;
    bool quiet = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--preset", o.preset, "shipped preset name");
    sub->add_option("--seed", o.seed, "base seed (geometry seed for 'ensemble')");
    sub->add_option("--n-traj", o.n_traj, "trajectories per point (after scaling)");
    sub->add_option("--scale", o.scale, "multiplier for atom and trajectory counts");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker threads");
    sub->add_option("--curve", o.curve, "curve label (single-point subcommands)");
    sub->add_flag("--quiet", o.quiet, "no progress output");
}

config::RunConfig load_config(const CommonOptions& o) {
    if (o.config_path.empty() == o.preset.empty())
        throw ConfigError("give exactly one of --config and --preset");
    config::RunConfig c = o.preset.empty() ? config::load(o.config_path) : presets::load(o.preset);
    if (o.scale)
        c.scale = *o.scale;
    c = config::apply_scale(c);
    if (o.n_traj)
        c.n_traj = *o.n_traj;
    if (o.seed)
        c.base_seed = *o.seed;
    if (o.threads < 1)
        throw ConfigError("--threads must be >= 1");
    c.validate();
    return c;
}

// Resolved config of one curve (the first unless --curve is given).
config::RunConfig select_curve(const config::RunConfig& c, const std::string& label) {
    const auto curves = config::expand_curves(c);
    if (label.empty())
        return curves.front().second;
    for (const auto& [name, cfg] : curves)
        if (name == label)
            return cfg;
    throw ConfigError("no curve labelled '" + label + "'");
}

std::string out_path(const CommonOptions& o, const std::string& file) {
    std::filesystem::create_directories(o.out);
    return (std::filesystem::path(o.out) / file).string();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f)
        throw ConfigError("cannot write '" + path + "'");
    return f;
}

json point_summary(const sweeps::PointSetup& p) {
    return {{"variant", to_string(p.variant)},
            {"n_atoms", p.ens.size()},
            {"blockade_ratio", p.blockade_ratio},
            {"c6", p.ens.c6},
            {"realized_bar", p.realized_bar},
            {"gamma_out", p.gamma_out},
            {"delta_small", p.control.delta_small},
            {"g_c", p.control.g_c},
            {"g_p", p.probe.g_p},
            {"pulse_tau", p.control.pulse.tau},
            {"pulse_t0", p.control.pulse.t0},
            {"pulse_end", p.control.pulse.end()},
            {"t_max", p.t_max}};
}

int cmd_ensemble(const CommonOptions& o) {
    config::RunConfig c = load_config(o);
    if (o.seed)
        c.ensemble.seed = *o.seed;
    c = select_curve(c, o.curve);
    const sweeps::PointSetup p = sweeps::prepare_point(c);
    {
        auto f = open_out(out_path(o, "ensemble.csv"));
        ensemble::write_csv(f, p.ens);
    }
    {
        auto f = open_out(out_path(o, "channels.csv"));
        channels::write_csv(f, p.unit_channels);
    }
    json j = point_summary(p);
    j["ensemble_seed"] = c.ensemble.seed;
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_analytics(const CommonOptions& o) {
    const config::RunConfig c = select_curve(load_config(o), o.curve);
    const auto& cc = c.control;
    json j;
    j["variant"] = to_string(c.variant);
    j["two_photon_detuning"] = analytics::two_photon_detuning(cc.omega_c, cc.delta_big);
    if (c.variant == Variant::cavity) {
        j["gamma_out"] =
            analytics::gamma_out(c.variant, cc.C_c, cc.gamma_ec, cc.omega_c, cc.delta_big);
        j["dressed_two_photon_detuning"] = analytics::dressed_two_photon_detuning(
            cc.C_c, cc.gamma_ec, cc.omega_c, cc.delta_big);
        j["dressed_gamma_out"] =
            analytics::dressed_gamma_out(cc.C_c, cc.gamma_ec, cc.omega_c, cc.delta_big);
        j["storage_prob_cavity"] = analytics::storage_prob_cavity(cc.C_c);
    } else {
        j["gamma_out"] =
            analytics::gamma_out(c.variant, *cc.d_c, cc.gamma_ec, cc.omega_c, cc.delta_big);
        for (auto f : {analytics::FsFormula::nested, analytics::FsFormula::grouped})
            j["storage_prob_fs"][analytics::to_string(f)] =
                analytics::storage_prob_fs(*cc.d_c, cc.gamma_ec, cc.delta_big, f);
    }
    const sweeps::PointSetup p = sweeps::prepare_point(c);
    j["point"] = point_summary(p);
    const auto flat = sweeps::matched_alpha(p, config::Weighting::flat, c.grid_per_tau);
    const auto weighted = sweeps::matched_alpha(p, config::Weighting::weighted, c.grid_per_tau);
    j["gamma_r_bar_unit_flat"] = flat.gamma_r_bar_unit;
    j["gamma_r_bar_unit_weighted"] = weighted.gamma_r_bar_unit;
    j["matched_alpha_in_p_sq_flat"] = flat.matched_alpha_sq;
    j["matched_alpha_in_p_sq_weighted"] = weighted.matched_alpha_sq;
    const double a2 = c.weighting == config::Weighting::weighted ? weighted.matched_alpha_sq
                                                                  : flat.matched_alpha_sq;
    const auto ch = p.channels_at(a2);
    j["im_residual_flat"] = analytics::im_residual(ch.gamma_r.mean(), p.gamma_out);
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_trajectory(const CommonOptions& o) {
    const config::RunConfig c = select_curve(load_config(o), o.curve);
    const sweeps::PointSetup p = sweeps::prepare_point(c);
    const sweeps::AlphaChoice a = sweeps::choose_alpha(p, c);
    const auto ch = p.channels_at(a.alpha_sq);
    const dynamics::Generator g = dynamics::build_generator(p.variant, p.ens, p.control, ch);

    dynamics::LinearRunOptions lo;
    lo.t_end = p.control.pulse.end() + p.t_max;
    lo.sample_dt = lo.t_end / 2000.0;
    const dynamics::LinearRun run = dynamics::linear_run(g, lo);
    {
        auto f = open_out(out_path(o, "linear_run.csv"));
        output::write_time_series_csv(f, run.series);
    }

    trajectories::EngineOptions eo;
    eo.t_max = p.t_max;
    eo.stop = sweeps::resolve_stop(c.stop, trajectories::StopMode::full);
    eo.n_th = c.n_th;
    eo.grid_per_tau = c.grid_per_tau;
    const trajectories::TrajectoryEngine engine(g, ch, eo);
    trajectories::BatchOptions bo;
    bo.n_traj = c.n_traj;
    bo.base_seed = c.base_seed;
    bo.threads = o.threads;
    bo.keep_records = true;
    const auto res = trajectories::batch_run(engine, bo);
    {
        auto f = open_out(out_path(o, "events.csv"));
        trajectories::write_events_csv(f, res.records);
    }
    const auto& s = res.stats;
    json j = point_summary(p);
    j["alpha_in_p_sq"] = a.alpha_sq;
    j["stop"] = trajectories::to_string(eo.stop);
    j["linear"] = {{"emitted", run.emitted},
                   {"spontaneous", run.spontaneous},
                   {"dephasing", run.dephasing},
                   {"residual", run.residual},
                   {"storage_probability", run.storage_probability}};
    j["stats"] = {{"n_traj", s.n_traj},
                  {"n_th", s.n_th},
                  {"im_probability", s.im_probability},
                  {"im_stderr", s.im_stderr},
                  {"efficiency", s.efficiency},
                  {"efficiency_stderr", s.efficiency_stderr},
                  {"mean_readout", s.mean_readout},
                  {"mean_readout_stderr", s.mean_readout_stderr},
                  {"stored_fraction", s.stored_fraction},
                  {"histogram", s.histogram},
                  {"histogram_censored", s.histogram_censored}};
    j["base_seed"] = c.base_seed;
    j["version"] = output::version();
    output::write_json(out_path(o, "trajectory.json"), j);
    std::cout << j["stats"].dump(2) << '\n';
    return 0;
}

int cmd_sweep(const CommonOptions& o, bool efficiency) {
    const config::RunConfig c = load_config(o);
    sweeps::SweepOptions so;
    so.threads = o.threads;
    if (!o.quiet)
        so.progress = [](const std::string& msg) { std::cerr << msg << std::endl; };
    const sweeps::SweepResult r =
        efficiency ? sweeps::run_efficiency_sweep(c, so) : sweeps::run_im_sweep(c, so);
    const std::string csv = output::emit_results(r, c, o.out, o.threads);
    std::cout << csv << '\n';
    return 0;
}

int cmd_oracle(const CommonOptions& o, int n_samples) {
    const config::RunConfig c = select_curve(load_config(o), o.curve);
    const sweeps::PointSetup p = sweeps::prepare_point(c);
    const sweeps::AlphaChoice a = sweeps::choose_alpha(p, c);
    const auto ch = p.channels_at(a.alpha_sq);
    const dynamics::Generator g = dynamics::build_generator(p.variant, p.ens, p.control, ch);
    std::vector<double> times;
    const double t_end = p.control.pulse.end() + p.t_max;
    for (int i = 0; i <= n_samples; ++i)
        times.push_back(t_end * i / n_samples);
    const auto samples = oracle::master_equation_oracle(g, ch, times);
    auto f = open_out(out_path(o, "oracle.csv"));
    f << "t,vacuum,source,cavity,excited,rydberg,readout,trace\n";
    for (const auto& s : samples)
        f << output::format_double(s.t) << ',' << output::format_double(s.populations.vacuum)
          << ',' << output::format_double(s.populations.source) << ','
          << output::format_double(s.populations.cavity) << ','
          << output::format_double(s.populations.excited) << ','
          << output::format_double(s.populations.rydberg) << ','
          << output::format_double(s.readout) << ',' << output::format_double(s.trace) << '\n';
    std::cout << out_path(o, "oracle.csv") << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rydberg continuous-wave single-photon transistor simulator"};
    app.set_version_flag("--version", output::version());
    app.require_subcommand(1);

    CommonOptions o;
    int n_samples = 200;
    auto* ens = app.add_subcommand("ensemble", "sample the ensemble and dump geometry/channels");
    auto* ana = app.add_subcommand("analytics", "print closed-form quantities as JSON");
    auto* trj = app.add_subcommand("trajectory", "trajectory batch with event log");
    auto* ims = app.add_subcommand("im-sweep", "impedance-matching sweep over probe intensity");
    auto* eff = app.add_subcommand("efficiency-sweep", "efficiency sweep");
    auto* orc = app.add_subcommand("oracle", "dense master-equation populations (N <= 4)");
    for (auto* sub : {ens, ana, trj, ims, eff, orc})
        add_common(sub, o);
    orc->add_option("--samples", n_samples, "number of sample intervals");
    auto* list = app.add_subcommand("presets", "list shipped presets");
    std::string show;
    list->add_option("--show", show, "print the JSON of one preset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*list) {
            if (!show.empty())
                std::cout << presets::text(show) << '\n';
            else
                for (const auto& n : presets::names())
                    std::cout << n << '\n';
            return 0;
        }
        if (*ens)
            return cmd_ensemble(o);
        if (*ana)
            return cmd_analytics(o);
        if (*trj)
            return cmd_trajectory(o);
        if (*ims)
            return cmd_sweep(o, false);
        if (*eff)
            return cmd_sweep(o, true);
        if (*orc)
            return cmd_oracle(o, n_samples);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
