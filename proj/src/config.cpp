#include "rydswitch/config.hpp"
#include "rydswitch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rydswitch::config {

using nlohmann::json;

const char* to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::none:
        return "none";
    case SweepAxis::alpha_in_p_sq:
        return "alpha_in_p_sq";
    case SweepAxis::cbar_bp:
        return "cbar_bp";
    case SweepAxis::dbar_bp:
        return "dbar_bp";
    case SweepAxis::C_c:
        return "C_c";
    case SweepAxis::d_c:
        return "d_c";
    }
    return "none";
}

const char* to_string(AlphaMode m) {
    switch (m) {
    case AlphaMode::fixed:
        return "fixed";
    case AlphaMode::matched:
        return "matched";
    case AlphaMode::scan:
        return "scan";
    }
    return "matched";
}

const char* to_string(Weighting w) {
    return w == Weighting::weighted ? "weighted" : "flat";
}

const char* to_string(StopSetting s) {
    switch (s) {
    case StopSetting::automatic:
        return "auto";
    case StopSetting::full:
        return "full";
    case StopSetting::pulse_end:
        return "pulse_end";
    case StopSetting::threshold:
        return "threshold";
    }
    return "auto";
}

namespace {

template <class E>
E enum_from(const std::string& s, std::initializer_list<E> all, const char* what) {
    for (E e : all)
        if (s == to_string(e))
            return e;
    throw ConfigError(std::string("config: unknown ") + what + " '" + s + "'");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (!j.is_object())
        throw ConfigError(std::string("config: '") + where + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key()))
            throw ConfigError(std::string("config: unknown key '") + it.key() + "' in " + where);
}

double get_number(const json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null())
        return fallback;
    if (!j.at(key).is_number())
        throw ConfigError(std::string("config: '") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::optional<double> get_optional(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    if (!j.at(key).is_number())
        throw ConfigError(std::string("config: '") + key + "' must be a number");
    return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key) || j.at(key).is_null())
        return fallback;
    if (!j.at(key).is_number_integer())
        throw ConfigError(std::string("config: '") + key + "' must be an integer");
    return j.at(key).get<int>();
}

void put_optional(json& j, const char* key, const std::optional<double>& v) {
    if (v)
        j[key] = *v;
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

} // namespace

void RunConfig::validate() const {
    ensemble.validate();
    if (variant == Variant::freespace && ensemble.kind != ensemble::GeometryKind::gaussian1d)
        throw ConfigError("config: the free-space variant needs a gaussian1d ensemble");
    if (n_traj < 1)
        throw ConfigError("config: n_traj must be >= 1");
    if (n_th < 1)
        throw ConfigError("config: n_th must be >= 1");
    if (!finite_positive(scale))
        throw ConfigError("config: scale must be positive");
    if (grid_per_tau < 4)
        throw ConfigError("config: grid_per_tau must be >= 4");
    if (t_max && !finite_positive(*t_max))
        throw ConfigError("config: t_max must be positive");

    if (!finite_positive(probe.gamma_ep) || !std::isfinite(probe.omega_p) || probe.omega_p == 0.0)
        throw ConfigError("config: probe needs gamma_ep > 0 and nonzero omega_p");
    if (probe.g_p && probe.c_p1)
        throw ConfigError("config: give at most one of probe.g_p and probe.c_p1");
    if (probe.g_p && !(*probe.g_p >= 0.0))
        throw ConfigError("config: probe.g_p must be nonnegative");
    if (probe.c_p1 && !(*probe.c_p1 >= 0.0))
        throw ConfigError("config: probe.c_p1 must be nonnegative");
    if (probe.blockade_ratio.has_value() == probe.target_bar.has_value())
        throw ConfigError("config: give exactly one of probe.blockade_ratio and probe.target_bar");
    if (probe.blockade_ratio && !finite_positive(*probe.blockade_ratio))
        throw ConfigError("config: probe.blockade_ratio must be positive");
    if (probe.target_bar && !finite_positive(*probe.target_bar))
        throw ConfigError("config: probe.target_bar must be positive");
    if (!(probe.alpha_in_p_sq >= 0.0) || !std::isfinite(probe.alpha_in_p_sq))
        throw ConfigError("config: probe.alpha_in_p_sq must be nonnegative");

    if (!finite_positive(control.gamma_ec))
        throw ConfigError("config: control.gamma_ec must be positive");
    if (!std::isfinite(control.delta_big) || !std::isfinite(control.omega_c))
        throw ConfigError("config: control detunings must be finite");
    if (variant == Variant::cavity) {
        if (!probe.kappa_p || !finite_positive(*probe.kappa_p))
            throw ConfigError("config: cavity variant needs probe.kappa_p > 0");
        if (!finite_positive(control.kappa_c) || !finite_positive(control.C_c))
            throw ConfigError("config: cavity variant needs control.kappa_c > 0 and C_c > 0");
    } else {
        if (!control.d_c || !finite_positive(*control.d_c))
            throw ConfigError("config: free-space variant needs control.d_c > 0");
        if (probe.d_p1 && !(*probe.d_p1 >= 0.0))
            throw ConfigError("config: probe.d_p1 must be nonnegative");
    }
    if (control.delta_mode == DeltaMode::dressed && variant != Variant::cavity)
        throw ConfigError("config: dressed two-photon detuning is defined for the cavity only");
    if (control.delta_mode != DeltaMode::value && control.delta_big == 0.0)
        throw DomainError("config: analytic two-photon detuning needs delta_big != 0");
    if (control.pulse.tau && !finite_positive(*control.pulse.tau))
        throw ConfigError("config: pulse.tau must be positive");
    if (control.pulse.t0 && !(*control.pulse.t0 >= 0.0))
        throw ConfigError("config: pulse.t0 must be nonnegative");
    if (!finite_positive(control.pulse.bandwidth_fraction))
        throw ConfigError("config: pulse.bandwidth_fraction must be positive");

    for (double v : sweep.values) {
        if (!std::isfinite(v))
            throw ConfigError("config: sweep values must be finite");
        if (sweep.axis == SweepAxis::alpha_in_p_sq ? v < 0.0 : !(v > 0.0))
            throw ConfigError("config: sweep value out of range for axis " +
                              std::string(to_string(sweep.axis)));
    }
    if (!sweep.point_patches.empty() && sweep.point_patches.size() != sweep.values.size())
        throw ConfigError("config: sweep.point_patches must match sweep.values in length");
    if ((sweep.axis == SweepAxis::cbar_bp || sweep.axis == SweepAxis::C_c) &&
        variant != Variant::cavity)
        throw ConfigError("config: sweep axis needs the cavity variant");
    if ((sweep.axis == SweepAxis::dbar_bp || sweep.axis == SweepAxis::d_c) &&
        variant != Variant::freespace)
        throw ConfigError("config: sweep axis needs the free-space variant");
    for (double b : bar_candidates)
        if (!finite_positive(b))
            throw ConfigError("config: bar_candidates must be positive");
}

RunConfig from_json(const json& j) {
    try {
        check_keys(j,
                   {"name", "variant", "ensemble", "probe", "control", "sweep", "n_traj",
                    "base_seed", "t_max", "n_th", "stop", "alpha_mode", "im_weighting",
                    "bar_candidates", "grid_per_tau", "scale", "curves"},
                   "config");
        RunConfig c;
        if (j.contains("name"))
            c.name = j.at("name").get<std::string>();
        if (j.contains("variant"))
            c.variant = j.at("variant").get<std::string>() == "freespace" ? Variant::freespace
                        : j.at("variant").get<std::string>() == "cavity"
                            ? Variant::cavity
                            : throw ConfigError("config: variant must be cavity or freespace");

        c.ensemble.kind = c.variant == Variant::cavity ? ensemble::GeometryKind::gaussian3d
                                                       : ensemble::GeometryKind::gaussian1d;
        if (j.contains("ensemble")) {
            const json& e = j.at("ensemble");
            check_keys(e, {"kind", "n_atoms", "sigma", "length", "seed", "rho_min"}, "ensemble");
            if (e.contains("kind")) {
                const auto k = e.at("kind").get<std::string>();
                if (k == "gaussian3d")
                    c.ensemble.kind = ensemble::GeometryKind::gaussian3d;
                else if (k == "gaussian1d")
                    c.ensemble.kind = ensemble::GeometryKind::gaussian1d;
                else
                    throw ConfigError("config: unknown ensemble kind '" + k + "'");
            }
            c.ensemble.n_atoms = get_int(e, "n_atoms", c.ensemble.n_atoms);
            c.ensemble.sigma = get_number(e, "sigma", c.ensemble.sigma);
            c.ensemble.length = get_number(e, "length", c.ensemble.length);
            if (e.contains("seed"))
                c.ensemble.seed = e.at("seed").get<std::uint64_t>();
            c.ensemble.rho_min = get_number(e, "rho_min", c.ensemble.rho_min);
        }

        if (j.contains("probe")) {
            const json& p = j.at("probe");
            check_keys(p,
                       {"omega_p", "kappa_p", "gamma_ep", "g_p", "c_p1", "d_p1", "alpha_in_p_sq",
                        "blockade_ratio", "target_bar"},
                       "probe");
            c.probe.omega_p = get_number(p, "omega_p", c.probe.omega_p);
            c.probe.kappa_p = get_optional(p, "kappa_p");
            c.probe.gamma_ep = get_number(p, "gamma_ep", c.probe.gamma_ep);
            c.probe.g_p = get_optional(p, "g_p");
            c.probe.c_p1 = get_optional(p, "c_p1");
            c.probe.d_p1 = get_optional(p, "d_p1");
            c.probe.alpha_in_p_sq = get_number(p, "alpha_in_p_sq", 0.0);
            c.probe.blockade_ratio = get_optional(p, "blockade_ratio");
            c.probe.target_bar = get_optional(p, "target_bar");
        }

        if (j.contains("control")) {
            const json& k = j.at("control");
            check_keys(k,
                       {"C_c", "kappa_c", "gamma_ec", "delta_big", "omega_c", "delta_small", "d_c",
                        "pulse"},
                       "control");
            c.control.C_c = get_number(k, "C_c", c.control.C_c);
            c.control.kappa_c = get_number(k, "kappa_c", c.control.kappa_c);
            c.control.gamma_ec = get_number(k, "gamma_ec", c.control.gamma_ec);
            c.control.delta_big = get_number(k, "delta_big", c.control.delta_big);
            c.control.omega_c = get_number(k, "omega_c", c.control.omega_c);
            c.control.d_c = get_optional(k, "d_c");
            if (k.contains("delta_small") && !k.at("delta_small").is_null()) {
                const json& d = k.at("delta_small");
                if (d.is_number()) {
                    c.control.delta_mode = DeltaMode::value;
                    c.control.delta_small = d.get<double>();
                } else if (d == "analytic") {
                    c.control.delta_mode = DeltaMode::analytic;
                } else if (d == "dressed") {
                    c.control.delta_mode = DeltaMode::dressed;
                } else {
                    throw ConfigError("config: delta_small must be a number, 'analytic' or "
                                      "'dressed'");
                }
            }
            if (k.contains("pulse")) {
                const json& q = k.at("pulse");
                check_keys(q, {"tau", "t0", "bandwidth_fraction"}, "pulse");
                c.control.pulse.tau = get_optional(q, "tau");
                c.control.pulse.t0 = get_optional(q, "t0");
                c.control.pulse.bandwidth_fraction =
                    get_number(q, "bandwidth_fraction", c.control.pulse.bandwidth_fraction);
            }
        }

        if (j.contains("sweep")) {
            const json& s = j.at("sweep");
            check_keys(s, {"axis", "values", "relative", "point_patches"}, "sweep");
            if (s.contains("axis"))
                c.sweep.axis = enum_from<SweepAxis>(
                    s.at("axis").get<std::string>(),
                    {SweepAxis::none, SweepAxis::alpha_in_p_sq, SweepAxis::cbar_bp,
                     SweepAxis::dbar_bp, SweepAxis::C_c, SweepAxis::d_c},
                    "sweep axis");
            if (s.contains("values"))
                c.sweep.values = s.at("values").get<std::vector<double>>();
            if (s.contains("relative"))
                c.sweep.relative = s.at("relative").get<bool>();
            if (s.contains("point_patches"))
                c.sweep.point_patches = s.at("point_patches").get<std::vector<json>>();
        }

        c.n_traj = get_int(j, "n_traj", c.n_traj);
        if (j.contains("base_seed"))
            c.base_seed = j.at("base_seed").get<std::uint64_t>();
        c.t_max = get_optional(j, "t_max");
        c.n_th = get_int(j, "n_th", c.n_th);
        if (j.contains("stop"))
            c.stop = enum_from<StopSetting>(j.at("stop").get<std::string>(),
                                            {StopSetting::automatic, StopSetting::full,
                                             StopSetting::pulse_end, StopSetting::threshold},
                                            "stop mode");
        if (j.contains("alpha_mode"))
            c.alpha_mode = enum_from<AlphaMode>(
                j.at("alpha_mode").get<std::string>(),
                {AlphaMode::fixed, AlphaMode::matched, AlphaMode::scan},
                "alpha_mode");
        if (j.contains("im_weighting"))
            c.weighting = enum_from<Weighting>(j.at("im_weighting").get<std::string>(),
                                               {Weighting::weighted, Weighting::flat},
                                               "im_weighting");
        if (j.contains("bar_candidates"))
            c.bar_candidates = j.at("bar_candidates").get<std::vector<double>>();
        c.grid_per_tau = get_int(j, "grid_per_tau", c.grid_per_tau);
        c.scale = get_number(j, "scale", c.scale);
        if (j.contains("curves")) {
            for (const json& cv : j.at("curves")) {
                check_keys(cv, {"label", "patch"}, "curve");
                Curve curve;
                curve.label = cv.at("label").get<std::string>();
                curve.patch = cv.contains("patch") ? cv.at("patch") : json::object();
                c.curves.push_back(std::move(curve));
            }
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

json to_json(const RunConfig& c) {
    json j;
    j["name"] = c.name;
    j["variant"] = to_string(c.variant);
    j["ensemble"] = {{"kind", ensemble::to_string(c.ensemble.kind)},
                     {"n_atoms", c.ensemble.n_atoms},
                     {"sigma", c.ensemble.sigma},
                     {"length", c.ensemble.length},
                     {"seed", c.ensemble.seed},
                     {"rho_min", c.ensemble.rho_min}};

    json p = {{"omega_p", c.probe.omega_p},
              {"gamma_ep", c.probe.gamma_ep},
              {"alpha_in_p_sq", c.probe.alpha_in_p_sq}};
    put_optional(p, "kappa_p", c.probe.kappa_p);
    put_optional(p, "g_p", c.probe.g_p);
    put_optional(p, "c_p1", c.probe.c_p1);
    put_optional(p, "d_p1", c.probe.d_p1);
    put_optional(p, "blockade_ratio", c.probe.blockade_ratio);
    put_optional(p, "target_bar", c.probe.target_bar);
    j["probe"] = p;

    json k = {{"C_c", c.control.C_c},           {"kappa_c", c.control.kappa_c},
              {"gamma_ec", c.control.gamma_ec}, {"delta_big", c.control.delta_big},
              {"omega_c", c.control.omega_c}};
    switch (c.control.delta_mode) {
    case DeltaMode::value:
        k["delta_small"] = c.control.delta_small;
        break;
    case DeltaMode::analytic:
        k["delta_small"] = "analytic";
        break;
    case DeltaMode::dressed:
        k["delta_small"] = "dressed";
        break;
    }
    put_optional(k, "d_c", c.control.d_c);
    json q = {{"bandwidth_fraction", c.control.pulse.bandwidth_fraction}};
    put_optional(q, "tau", c.control.pulse.tau);
    put_optional(q, "t0", c.control.pulse.t0);
    k["pulse"] = q;
    j["control"] = k;

    j["sweep"] = {{"axis", to_string(c.sweep.axis)},
                  {"values", c.sweep.values},
                  {"relative", c.sweep.relative}};
    if (!c.sweep.point_patches.empty())
        j["sweep"]["point_patches"] = c.sweep.point_patches;
    j["n_traj"] = c.n_traj;
    j["base_seed"] = c.base_seed;
    put_optional(j, "t_max", c.t_max);
    j["n_th"] = c.n_th;
    j["stop"] = to_string(c.stop);
    j["alpha_mode"] = to_string(c.alpha_mode);
    j["im_weighting"] = to_string(c.weighting);
    j["bar_candidates"] = c.bar_candidates;
    j["grid_per_tau"] = c.grid_per_tau;
    j["scale"] = c.scale;
    if (!c.curves.empty()) {
        json cv = json::array();
        for (const Curve& curve : c.curves)
            cv.push_back({{"label", curve.label}, {"patch", curve.patch}});
        j["curves"] = cv;
    }
    return j;
}

RunConfig parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return from_json(j);
}

RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

RunConfig with_patch(const RunConfig& c, const json& patch) {
    json j = to_json(c);
    j.erase("curves");
    try {
        j.merge_patch(patch);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad patch: ") + e.what());
    }
    return from_json(j);
}

RunConfig apply_scale(const RunConfig& c) {
    RunConfig out = c;
    if (c.scale != 1.0) {
        out.ensemble.n_atoms =
            std::max(2, static_cast<int>(std::lround(c.ensemble.n_atoms * c.scale)));
        out.n_traj = std::max(1, static_cast<int>(std::lround(c.n_traj * c.scale)));
        out.scale = 1.0;
    }
    out.validate();
    return out;
}

std::vector<std::pair<std::string, RunConfig>> expand_curves(const RunConfig& c) {
    std::vector<std::pair<std::string, RunConfig>> out;
    if (c.curves.empty()) {
        RunConfig base = c;
        out.emplace_back(c.name, apply_scale(base));
        return out;
    }
    for (const Curve& curve : c.curves) {
        RunConfig r = with_patch(c, curve.patch);
        out.emplace_back(curve.label, apply_scale(r));
    }
    return out;
}

std::uint64_t config_hash(const RunConfig& c) {
    const std::string text = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace rydswitch::config
