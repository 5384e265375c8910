#include "rydswitch/presets.hpp"
#include "rydswitch/errors.hpp"

#include <map>

namespace rydswitch::presets {

namespace {

// Shared cavity settings: Delta = 180, Omega_c = 5, Omega_p = 5, kappa = gamma = 1.
const std::map<std::string, std::string>& table() {
    static const std::map<std::string, std::string> t = {
        {"fig2a", R"({
  "name": "fig2a",
  "variant": "cavity",
  "ensemble": {"kind": "gaussian3d", "n_atoms": 1000, "sigma": 1.0, "seed": 11},
  "probe": {"omega_p": 5.0, "kappa_p": 1.0, "gamma_ep": 1.0, "c_p1": 0.1, "target_bar": 0.5},
  "control": {"C_c": 100.0, "kappa_c": 1.0, "gamma_ec": 1.0, "delta_big": 180.0,
              "omega_c": 5.0, "delta_small": "dressed"},
  "sweep": {"axis": "alpha_in_p_sq", "relative": true,
            "values": [0.125, 0.25, 0.5, 0.707, 1.0, 1.414, 2.0, 2.828, 4.0, 8.0]},
  "n_traj": 10000,
  "base_seed": 1,
  "alpha_mode": "matched",
  "im_weighting": "weighted",
  "curves": [
    {"label": "C_c=10", "patch": {"control": {"C_c": 10.0}}},
    {"label": "C_c=40", "patch": {"control": {"C_c": 40.0}}},
    {"label": "C_c=100", "patch": {"control": {"C_c": 100.0}}}
  ]
})"},
        {"fig2b", R"({
  "name": "fig2b",
  "variant": "cavity",
  "ensemble": {"kind": "gaussian3d", "n_atoms": 1000, "sigma": 1.0, "seed": 11},
  "probe": {"omega_p": 5.0, "kappa_p": 1.0, "gamma_ep": 1.0, "c_p1": 0.1, "target_bar": 0.3},
  "control": {"C_c": 100.0, "kappa_c": 1.0, "gamma_ec": 1.0, "delta_big": 180.0,
              "omega_c": 5.0, "delta_small": "dressed"},
  "sweep": {"axis": "cbar_bp", "values": [0.1, 0.2, 0.3, 0.5, 0.7, 1.0]},
  "n_traj": 10000,
  "base_seed": 1,
  "n_th": 3,
  "alpha_mode": "matched",
  "im_weighting": "weighted",
  "curves": [
    {"label": "C_c=10", "patch": {"control": {"C_c": 10.0}}},
    {"label": "C_c=40", "patch": {"control": {"C_c": 40.0}}},
    {"label": "C_c=100", "patch": {"control": {"C_c": 100.0}}}
  ]
})"},
        {"fig2c", R"({
  "name": "fig2c",
  "variant": "cavity",
  "ensemble": {"kind": "gaussian3d", "n_atoms": 1000, "sigma": 1.0, "seed": 11},
  "probe": {"omega_p": 5.0, "kappa_p": 1.0, "gamma_ep": 1.0, "c_p1": 0.1, "target_bar": 0.3},
  "control": {"C_c": 100.0, "kappa_c": 1.0, "gamma_ec": 1.0, "delta_big": 180.0,
              "omega_c": 5.0, "delta_small": "dressed"},
  "sweep": {"axis": "C_c", "values": [10.0, 20.0, 40.0, 60.0, 100.0]},
  "n_traj": 10000,
  "base_seed": 1,
  "n_th": 3,
  "alpha_mode": "scan",
  "im_weighting": "weighted",
  "bar_candidates": [0.2, 0.3, 0.5]
})"},
        {"fig3a", R"({
  "name": "fig3a",
  "variant": "freespace",
  "ensemble": {"kind": "gaussian1d", "n_atoms": 1000, "sigma": 1.0, "length": 4.0, "seed": 13},
  "probe": {"omega_p": 10.0, "gamma_ep": 1.0, "d_p1": 0.1, "target_bar": 2.0},
  "control": {"gamma_ec": 1.0, "d_c": 100.0, "delta_big": 200.0, "omega_c": 10.0,
              "delta_small": 0.45},
  "sweep": {"axis": "alpha_in_p_sq", "relative": true,
            "values": [0.125, 0.25, 0.5, 0.707, 1.0, 1.414, 2.0, 2.828, 4.0, 8.0]},
  "n_traj": 10000,
  "base_seed": 1,
  "alpha_mode": "matched",
  "im_weighting": "weighted",
  "curves": [
    {"label": "d_c=20", "patch": {"probe": {"d_p1": 0.02},
     "control": {"d_c": 20.0, "delta_big": 40.0, "omega_c": 2.0, "delta_small": 0.113}}},
    {"label": "d_c=40", "patch": {"probe": {"d_p1": 0.04},
     "control": {"d_c": 40.0, "delta_big": 80.0, "omega_c": 4.0, "delta_small": 0.17}}},
    {"label": "d_c=100", "patch": {"probe": {"d_p1": 0.1},
     "control": {"d_c": 100.0, "delta_big": 200.0, "omega_c": 10.0, "delta_small": 0.45}}}
  ]
})"},
        {"fig3b", R"({
  "name": "fig3b",
  "variant": "freespace",
  "ensemble": {"kind": "gaussian1d", "n_atoms": 1000, "sigma": 1.0, "length": 4.0, "seed": 13},
  "probe": {"omega_p": 10.0, "gamma_ep": 1.0, "d_p1": 0.1, "target_bar": 2.0},
  "control": {"gamma_ec": 1.0, "d_c": 100.0, "delta_big": 200.0, "omega_c": 10.0,
              "delta_small": 0.45},
  "sweep": {"axis": "dbar_bp", "values": [1.0, 2.0, 3.0, 4.0, 5.3, 7.0]},
  "n_traj": 10000,
  "base_seed": 1,
  "n_th": 3,
  "alpha_mode": "matched",
  "im_weighting": "weighted",
  "curves": [
    {"label": "d_c=20", "patch": {"probe": {"d_p1": 0.02},
     "control": {"d_c": 20.0, "delta_big": 40.0, "omega_c": 2.0, "delta_small": 0.113}}},
    {"label": "d_c=40", "patch": {"probe": {"d_p1": 0.04},
     "control": {"d_c": 40.0, "delta_big": 80.0, "omega_c": 4.0, "delta_small": 0.17}}},
    {"label": "d_c=100", "patch": {"probe": {"d_p1": 0.1},
     "control": {"d_c": 100.0, "delta_big": 200.0, "omega_c": 10.0, "delta_small": 0.45}}}
  ]
})"},
        {"fig3c", R"({
  "name": "fig3c",
  "variant": "freespace",
  "ensemble": {"kind": "gaussian1d", "n_atoms": 1000, "sigma": 1.0, "length": 4.0, "seed": 13},
  "probe": {"omega_p": 10.0, "gamma_ep": 1.0, "d_p1": 0.1, "target_bar": 2.0},
  "control": {"gamma_ec": 1.0, "d_c": 100.0, "delta_big": 200.0, "omega_c": 10.0,
              "delta_small": 0.45},
  "sweep": {"axis": "d_c", "values": [20.0, 40.0, 100.0],
            "point_patches": [
              {"probe": {"d_p1": 0.02},
               "control": {"delta_big": 40.0, "omega_c": 2.0, "delta_small": 0.113}},
              {"probe": {"d_p1": 0.04},
               "control": {"delta_big": 80.0, "omega_c": 4.0, "delta_small": 0.17}},
              {"probe": {"d_p1": 0.1},
               "control": {"delta_big": 200.0, "omega_c": 10.0, "delta_small": 0.45}}
            ]},
  "n_traj": 10000,
  "base_seed": 1,
  "n_th": 3,
  "alpha_mode": "matched",
  "im_weighting": "weighted",
  "bar_candidates": [2.0, 5.3]
})"},
        {"smoke", R"({
  "name": "smoke",
  "variant": "cavity",
  "ensemble": {"kind": "gaussian3d", "n_atoms": 24, "sigma": 1.0, "seed": 5},
  "probe": {"omega_p": 5.0, "kappa_p": 1.0, "gamma_ep": 1.0, "c_p1": 0.1, "target_bar": 0.5},
  "control": {"C_c": 20.0, "kappa_c": 1.0, "gamma_ec": 1.0, "delta_big": 180.0,
              "omega_c": 5.0, "delta_small": "dressed"},
  "sweep": {"axis": "alpha_in_p_sq", "relative": true, "values": [0.5, 1.0, 2.0]},
  "n_traj": 200,
  "base_seed": 7,
  "alpha_mode": "matched",
  "im_weighting": "weighted",
  "curves": [
    {"label": "C_c=5", "patch": {"control": {"C_c": 5.0}}},
    {"label": "C_c=10", "patch": {"control": {"C_c": 10.0}}},
    {"label": "C_c=20", "patch": {"control": {"C_c": 20.0}}}
  ]
})"},
    };
    return t;
}

} // namespace

std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : table())
        out.push_back(k);
    return out;
}

const std::string& text(const std::string& name) {
    const auto& t = table();
    auto it = t.find(name);
    if (it == t.end())
        throw ConfigError("unknown preset '" + name + "'");
    return it->second;
}

config::RunConfig load(const std::string& name) { return config::parse(text(name)); }

} // namespace rydswitch::presets
