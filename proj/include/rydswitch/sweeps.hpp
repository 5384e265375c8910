#pragma once

#include "rydswitch/channels.hpp"
#include "rydswitch/config.hpp"
#include "rydswitch/dynamics.hpp"
#include "rydswitch/ensemble.hpp"
#include "rydswitch/trajectories.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rydswitch::sweeps {

// Everything about a parameter point that does not depend on the probe
// intensity. Channels are stored at |alpha_in,p|^2 = 1.
struct PointSetup {
    Variant variant = Variant::cavity;
    ensemble::AtomEnsemble ens;
    ensemble::ProbeParams probe;
    dynamics::ControlParams control;
    channels::JumpChannelSet unit_channels;
    double blockade_ratio = 0.0; // |Omega_p|^2 sigma^6 / C6
    double realized_bar = 0.0;   // mean Re C_b,p (cavity) or Re d_b,p (free space)
    double gamma_out = 0.0;
    double t_max = 0.0;

    // generator and channels at the given probe intensity
    channels::JumpChannelSet channels_at(double alpha_sq) const;
    dynamics::Generator generator_at(double alpha_sq) const;
};

// Ensemble mean of Re C_b,p^k or Re d_b,p^k.
double mean_blockaded(Variant variant, const ensemble::AtomEnsemble& ens,
                      const ensemble::ProbeParams& probe);

// Blockade ratio whose mean blockaded cooperativity (depth) equals `target`
// within 1%, found by bisection in log(ratio). `ens` keeps its positions and
// receives the matching c6. Throws NoSolutionError if out of reach.
double solve_blockade_ratio(Variant variant, ensemble::AtomEnsemble& ens,
                            const ensemble::ProbeParams& probe, double target);

PointSetup prepare_point(const config::RunConfig& c);

struct AlphaChoice {
    double alpha_sq = 0.0;
    double matched_alpha_sq = 0.0; // gamma_r_bar = gamma_out
    double gamma_r_bar_unit = 0.0; // mean dephasing at |alpha|^2 = 1
    int linear_runs = 0;
};

// Probe intensity for which the mean (optionally storage-weighted) dephasing
// equals gamma_out. Weights come from a grid linear run at the flat match.
AlphaChoice matched_alpha(const PointSetup& p, config::Weighting weighting, int per_tau = 64);

struct ScanSettings {
    std::vector<double> grid{0.25, 0.5, 1.0, 2.0, 4.0}; // factors of the matched value
    double log_tol = 0.02;
    int max_iter = 30;
};

// Picks |alpha|^2 according to c.alpha_mode. The scan maximises the
// deterministic storage probability over a log grid, then refines by
// golden-section search in log(|alpha|^2).
AlphaChoice choose_alpha(const PointSetup& p, const config::RunConfig& c,
                         const ScanSettings& scan = {});

struct PointResult {
    double alpha_sq = 0.0;
    double gamma_r_bar = 0.0; // weighted as configured
    double p_ryd_deterministic = 0.0;
    trajectories::RunStats stats;
};

// Deterministic linear run plus trajectory batch at one probe intensity.
PointResult evaluate_point(const PointSetup& p, const config::RunConfig& c, double alpha_sq,
                           trajectories::StopMode stop, std::uint64_t seed, int threads);

struct SweepRow {
    std::string curve;
    std::string axis;
    double value = 0.0;
    std::string status = "ok";
    double realized_bar = 0.0;
    double blockade_ratio = 0.0;
    double alpha_factor = 0.0; // alpha_in_p_sq relative to the matched value
    double alpha_in_p_sq = 0.0;
    double gamma_out = 0.0;
    double gamma_r_bar = 0.0;
    double delta_small = 0.0;
    double p_ryd_deterministic = 0.0;
    double im_probability = 0.0;
    double im_stderr = 0.0;
    double efficiency = 0.0;
    double efficiency_stderr = 0.0;
    double mean_readout = 0.0;
    double mean_readout_stderr = 0.0;
    double stored_fraction = 0.0;
    int n_traj = 0;
    std::uint64_t point_seed = 0;
};

struct SweepResult {
    std::string name;
    std::string kind; // "im" or "efficiency"
    std::vector<SweepRow> rows;
    std::vector<double> wall_seconds; // per row, sidecar only
    std::vector<std::string> notes;   // skipped points and similar
    nlohmann::json settings;          // resolved curve configs, optimiser settings
};

struct SweepOptions {
    int threads = 1;
    ScanSettings scan;
    std::function<void(const std::string&)> progress;
};

trajectories::StopMode resolve_stop(config::StopSetting s, trajectories::StopMode automatic);

SweepResult run_im_sweep(const config::RunConfig& c, const SweepOptions& opt = {});
SweepResult run_efficiency_sweep(const config::RunConfig& c, const SweepOptions& opt = {});

} // namespace rydswitch::sweeps
