#pragma once

#include "rydswitch/ensemble.hpp"
#include "rydswitch/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rydswitch::config {

enum class SweepAxis { none, alpha_in_p_sq, cbar_bp, dbar_bp, C_c, d_c };
enum class AlphaMode { fixed, matched, scan };
enum class Weighting { weighted, flat };
enum class DeltaMode { value, analytic, dressed };
enum class StopSetting { automatic, full, pulse_end, threshold };

const char* to_string(SweepAxis a);
const char* to_string(AlphaMode m);
const char* to_string(Weighting w);
const char* to_string(StopSetting s);

struct ProbeConfig {
    double omega_p = 5.0;
    std::optional<double> kappa_p;
    double gamma_ep = 1.0;
    std::optional<double> g_p;  // explicit coupling
    std::optional<double> c_p1; // or single-atom cooperativity |g_p|^2/(kappa_p gamma_ep)
    std::optional<double> d_p1; // free space; defaults to d_c / N
    double alpha_in_p_sq = 0.0;
    std::optional<double> blockade_ratio; // |Omega_p|^2 sigma^6 / C6
    std::optional<double> target_bar;     // realise this mean C_b,p (or d_b,p) instead
};

struct PulseConfig {
    std::optional<double> tau;
    std::optional<double> t0;
    double bandwidth_fraction = 0.2; // rms bandwidth as a fraction of gamma_out
};

struct ControlConfig {
    double C_c = 0.0; // cavity
    double kappa_c = 1.0;
    double gamma_ec = 1.0;
    double delta_big = 180.0;
    double omega_c = 5.0;
    DeltaMode delta_mode = DeltaMode::analytic;
    double delta_small = 0.0; // used when delta_mode == value
    std::optional<double> d_c; // free space
    PulseConfig pulse;
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::none;
    std::vector<double> values;
    bool relative = false; // alpha axis: values multiply the matched intensity
    std::vector<nlohmann::json> point_patches; // optional, one merge patch per value
};

struct Curve {
    std::string label;
    nlohmann::json patch;
};

struct RunConfig {
    std::string name = "run";
    Variant variant = Variant::cavity;
    ensemble::EnsembleGeometry ensemble;
    ProbeConfig probe;
    ControlConfig control;
    SweepConfig sweep;
    int n_traj = 1000;
    std::uint64_t base_seed = 1;
    std::optional<double> t_max; // window after the pulse end, default 50 / gamma_out
    int n_th = 3;
    StopSetting stop = StopSetting::automatic;
    AlphaMode alpha_mode = AlphaMode::matched;
    Weighting weighting = Weighting::weighted;
    std::vector<double> bar_candidates; // efficiency: best of these targets per point
    int grid_per_tau = 64;
    double scale = 1.0; // multiplies n_atoms and n_traj
    std::vector<Curve> curves;

    void validate() const;
};

RunConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

RunConfig parse(const std::string& text);
RunConfig load(const std::string& path);

// Config with `patch` merged in (RFC 7396); curves are dropped.
RunConfig with_patch(const RunConfig& c, const nlohmann::json& patch);

// One resolved config per curve (the base config if there are none), with
// the scale applied.
std::vector<std::pair<std::string, RunConfig>> expand_curves(const RunConfig& c);

// Applies `scale` to n_atoms and n_traj and resets it to 1.
RunConfig apply_scale(const RunConfig& c);

// FNV-1a over the canonical JSON serialisation.
std::uint64_t config_hash(const RunConfig& c);

} // namespace rydswitch::config
