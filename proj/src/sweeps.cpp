#include "rydswitch/sweeps.hpp"
#include "rydswitch/analytics.hpp"
#include "rydswitch/errors.hpp"
#include "rydswitch/propagator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace rydswitch::sweeps {

using config::RunConfig;
using nlohmann::json;

channels::JumpChannelSet PointSetup::channels_at(double alpha_sq) const {
    if (!(alpha_sq >= 0.0))
        throw DomainError("probe intensity must be nonnegative");
    return unit_channels.scaled(std::sqrt(alpha_sq));
}

dynamics::Generator PointSetup::generator_at(double alpha_sq) const {
    return dynamics::build_generator(variant, ens, control, channels_at(alpha_sq));
}

double mean_blockaded(Variant variant, const ensemble::AtomEnsemble& ens,
                      const ensemble::ProbeParams& probe) {
    if (variant == Variant::cavity)
        return ensemble::blockaded_cooperativities(ens, probe).real().mean();
    return ensemble::blockaded_depths(ens, probe).real().mean();
}

double solve_blockade_ratio(Variant variant, ensemble::AtomEnsemble& ens,
                            const ensemble::ProbeParams& probe, double target) {
    if (!(target > 0.0))
        throw DomainError("solve_blockade_ratio: target must be positive");
    // The mean decreases monotonically with the ratio (weaker interactions).
    auto bar = [&](double log_ratio) {
        ensemble::set_c6(ens, ensemble::c6_from_blockade_ratio(probe.omega_p, 1.0,
                                                              std::exp(log_ratio)));
        return mean_blockaded(variant, ens, probe);
    };
    double lo = std::log(1e-12), hi = std::log(1e12);
    const double f_lo = bar(lo);
    if (f_lo < target * 0.99)
        throw NoSolutionError("target blockaded " +
                              std::string(variant == Variant::cavity ? "cooperativity "
                                                                     : "optical depth ") +
                              std::to_string(target) + " exceeds the full-blockade value " +
                              std::to_string(f_lo));
    if (bar(hi) > target)
        throw NoSolutionError("target blockaded value is below the weak-interaction limit");
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = bar(mid);
        if (f > target)
            lo = mid;
        else
            hi = mid;
        if (std::abs(f / target - 1.0) < 1e-10) {
            lo = hi = mid;
            break;
        }
    }
    const double log_ratio = 0.5 * (lo + hi);
    const double f = bar(log_ratio);
    if (std::abs(f / target - 1.0) > 0.01)
        throw NoSolutionError("blockade ratio bisection missed the target");
    return std::exp(log_ratio);
}

PointSetup prepare_point(const RunConfig& c) {
    c.validate();
    PointSetup p;
    p.variant = c.variant;
    p.ens = ensemble::sample_positions(c.ensemble);
    const int n = p.ens.size();
    const auto& cc = c.control;

    p.control.omega_c = cc.omega_c;
    p.control.gamma_ec = cc.gamma_ec;
    p.control.delta_big = cc.delta_big;
    if (c.variant == Variant::cavity) {
        p.control.kappa_c = cc.kappa_c;
        p.control.g_c = std::sqrt(cc.C_c * cc.kappa_c * cc.gamma_ec / n);
    } else {
        p.control.d_c = *cc.d_c;
    }

    const double coop_or_depth = c.variant == Variant::cavity ? cc.C_c : *cc.d_c;
    const bool dressed = cc.delta_mode == config::DeltaMode::dressed;
    p.gamma_out = dressed ? analytics::dressed_gamma_out(cc.C_c, cc.gamma_ec, cc.omega_c,
                                                         cc.delta_big)
                          : analytics::gamma_out(c.variant, coop_or_depth, cc.gamma_ec,
                                                 cc.omega_c, cc.delta_big);
    if (!(p.gamma_out > 0.0))
        throw DomainError("gamma_out vanishes for this configuration");
    switch (cc.delta_mode) {
    case config::DeltaMode::value:
        p.control.delta_small = cc.delta_small;
        break;
    case config::DeltaMode::analytic:
        p.control.delta_small = analytics::two_photon_detuning(cc.omega_c, cc.delta_big);
        break;
    case config::DeltaMode::dressed:
        p.control.delta_small =
            analytics::dressed_two_photon_detuning(cc.C_c, cc.gamma_ec, cc.omega_c, cc.delta_big);
        break;
    }

    dynamics::GaussianPulse pulse =
        dynamics::GaussianPulse::for_bandwidth(cc.pulse.bandwidth_fraction * p.gamma_out);
    if (cc.pulse.tau) {
        pulse.tau = *cc.pulse.tau;
        pulse.t0 = 5.0 * pulse.tau;
    }
    if (cc.pulse.t0)
        pulse.t0 = *cc.pulse.t0;
    pulse.validate();
    p.control.pulse = pulse;
    p.control.validate(c.variant);
    p.t_max = c.t_max ? *c.t_max : 50.0 / p.gamma_out;

    const auto& pc = c.probe;
    p.probe.omega_p = pc.omega_p;
    p.probe.gamma_ep = pc.gamma_ep;
    p.probe.alpha_in_p = 1.0;
    if (c.variant == Variant::cavity) {
        p.probe.kappa_p = *pc.kappa_p;
        if (pc.g_p)
            p.probe.g_p = *pc.g_p;
        else if (pc.c_p1)
            p.probe.g_p = std::sqrt(*pc.c_p1 * *pc.kappa_p * pc.gamma_ep);
        else
            p.probe.g_p = p.control.g_c;
    } else {
        p.probe.d_p1 = pc.d_p1 ? *pc.d_p1 : *cc.d_c / n;
        p.probe.g_p = 0.0;
    }
    p.probe.validate(c.variant);

    if (pc.target_bar) {
        p.blockade_ratio = solve_blockade_ratio(c.variant, p.ens, p.probe, *pc.target_bar);
    } else {
        p.blockade_ratio = *pc.blockade_ratio;
        ensemble::set_c6(p.ens,
                         ensemble::c6_from_blockade_ratio(pc.omega_p, 1.0, p.blockade_ratio));
    }
    p.realized_bar = mean_blockaded(c.variant, p.ens, p.probe);
    p.unit_channels = channels::build_channels(c.variant, p.ens, p.probe);
    return p;
}

AlphaChoice matched_alpha(const PointSetup& p, config::Weighting weighting, int per_tau) {
    AlphaChoice a;
    const Eigen::VectorXd& rates = p.unit_channels.gamma_r;
    a.gamma_r_bar_unit = rates.mean();
    a.matched_alpha_sq = analytics::matched_probe_intensity(p.gamma_out, a.gamma_r_bar_unit);
    if (weighting == config::Weighting::weighted) {
        // weights: time-integrated Rydberg population of the storage mode at the flat match
        const propagator::GridStorage run =
            propagator::grid_storage(p.generator_at(a.matched_alpha_sq), per_tau);
        ++a.linear_runs;
        a.gamma_r_bar_unit = analytics::weighted_mean(rates, run.rydberg_weights);
        a.matched_alpha_sq = analytics::matched_probe_intensity(p.gamma_out, a.gamma_r_bar_unit);
    }
    a.alpha_sq = a.matched_alpha_sq;
    return a;
}

AlphaChoice choose_alpha(const PointSetup& p, const RunConfig& c, const ScanSettings& scan) {
    AlphaChoice a;
    if (c.alpha_mode == config::AlphaMode::fixed) {
        a = matched_alpha(p, config::Weighting::flat, c.grid_per_tau);
        a.alpha_sq = c.probe.alpha_in_p_sq;
        return a;
    }
    a = matched_alpha(p, c.weighting, c.grid_per_tau);
    if (c.alpha_mode == config::AlphaMode::matched)
        return a;

    if (scan.grid.empty())
        throw ConfigError("scan grid is empty");
    auto p_ryd = [&](double log_factor) {
        ++a.linear_runs;
        return propagator::grid_storage(
                   p.generator_at(a.matched_alpha_sq * std::exp(log_factor)), c.grid_per_tau)
            .storage_probability;
    };
    std::vector<double> xs, ys;
    for (double f : scan.grid) {
        xs.push_back(std::log(f));
        ys.push_back(p_ryd(xs.back()));
    }
    const auto best = static_cast<std::size_t>(
        std::max_element(ys.begin(), ys.end()) - ys.begin());
    double lo = best > 0 ? xs[best - 1] : xs[best] - std::log(2.0);
    double hi = best + 1 < xs.size() ? xs[best + 1] : xs[best] + std::log(2.0);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = p_ryd(x1), f2 = p_ryd(x2);
    for (int it = 0; it < scan.max_iter && hi - lo > scan.log_tol; ++it) {
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = p_ryd(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = p_ryd(x2);
        }
    }
    double x_best = f1 > f2 ? x1 : x2;
    if (std::max(f1, f2) < ys[best])
        x_best = xs[best];
    a.alpha_sq = a.matched_alpha_sq * std::exp(x_best);
    return a;
}

PointResult evaluate_point(const PointSetup& p, const RunConfig& c, double alpha_sq,
                           trajectories::StopMode stop, std::uint64_t seed, int threads) {
    PointResult r;
    r.alpha_sq = alpha_sq;
    const channels::JumpChannelSet ch = p.channels_at(alpha_sq);
    trajectories::EngineOptions eo;
    eo.t_max = p.t_max;
    eo.stop = stop;
    eo.n_th = c.n_th;
    eo.grid_per_tau = c.grid_per_tau;
    const trajectories::TrajectoryEngine engine(
        dynamics::build_generator(p.variant, p.ens, p.control, ch), ch, eo);
    const propagator::GridStorage run = engine.deterministic_storage();
    r.p_ryd_deterministic = run.storage_probability;
    r.gamma_r_bar = c.weighting == config::Weighting::weighted
                        ? analytics::weighted_mean(ch.gamma_r, run.rydberg_weights)
                        : ch.gamma_r.mean();

    trajectories::BatchOptions bo;
    bo.n_traj = c.n_traj;
    bo.base_seed = seed;
    bo.threads = threads;
    r.stats = trajectories::batch_run(engine, bo).stats;
    return r;
}

trajectories::StopMode resolve_stop(config::StopSetting s, trajectories::StopMode automatic) {
    switch (s) {
    case config::StopSetting::full:
        return trajectories::StopMode::full;
    case config::StopSetting::pulse_end:
        return trajectories::StopMode::pulse_end;
    case config::StopSetting::threshold:
        return trajectories::StopMode::threshold;
    case config::StopSetting::automatic:
        break;
    }
    return automatic;
}

namespace {

using Clock = std::chrono::steady_clock;

// A sweep value together with its optional merge patch, in ascending order.
struct SweepPoint {
    double value;
    json patch;
};

std::vector<SweepPoint> sorted_points(const config::SweepConfig& s) {
    std::vector<SweepPoint> pts;
    for (std::size_t i = 0; i < s.values.size(); ++i)
        pts.push_back({s.values[i], s.point_patches.empty() ? json::object() : s.point_patches[i]});
    std::stable_sort(pts.begin(), pts.end(),
                     [](const SweepPoint& a, const SweepPoint& b) { return a.value < b.value; });
    return pts;
}

void fill_row(SweepRow& row, const PointSetup& p, const AlphaChoice& a, const PointResult& r,
              int n_traj) {
    row.realized_bar = p.realized_bar;
    row.blockade_ratio = p.blockade_ratio;
    row.alpha_in_p_sq = r.alpha_sq;
    row.alpha_factor = a.matched_alpha_sq > 0.0 ? r.alpha_sq / a.matched_alpha_sq : 0.0;
    row.gamma_out = p.gamma_out;
    row.gamma_r_bar = r.gamma_r_bar;
    row.delta_small = p.control.delta_small;
    row.p_ryd_deterministic = r.p_ryd_deterministic;
    row.im_probability = r.stats.im_probability;
    row.im_stderr = r.stats.im_stderr;
    row.efficiency = r.stats.efficiency;
    row.efficiency_stderr = r.stats.efficiency_stderr;
    row.mean_readout = r.stats.mean_readout;
    row.mean_readout_stderr = r.stats.mean_readout_stderr;
    row.stored_fraction = r.stats.stored_fraction;
    row.n_traj = n_traj;
}

std::string point_label(const std::string& curve, const char* axis, double value) {
    return "curve '" + curve + "', " + axis + " = " + std::to_string(value);
}

// Re-throws module errors with the failing point identified; NoSolutionError
// is reported back as a skipped point.
template <class F>
bool guarded(const std::string& where, std::string& skip_reason, F&& f) {
    try {
        f();
        return true;
    } catch (const NoSolutionError& e) {
        skip_reason = e.what();
        return false;
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(where + ": " + e.what());
    }
}

json scan_json(const ScanSettings& s) {
    return {{"grid", s.grid}, {"log_tol", s.log_tol}, {"max_iter", s.max_iter}};
}

void report(const SweepOptions& opt, const std::string& msg) {
    if (opt.progress)
        opt.progress(msg);
}

} // namespace

SweepResult run_im_sweep(const RunConfig& c, const SweepOptions& opt) {
    c.validate();
    if (c.sweep.axis != config::SweepAxis::alpha_in_p_sq)
        throw ConfigError("im sweep needs sweep axis alpha_in_p_sq");
    SweepResult out;
    out.name = c.name;
    out.kind = "im";
    out.settings = {{"scan", scan_json(opt.scan)}, {"curves", json::array()}};

    for (const auto& [label, cfg] : config::expand_curves(c)) {
        out.settings["curves"].push_back({{"label", label}, {"config", config::to_json(cfg)}});
        const auto stop = resolve_stop(cfg.stop, trajectories::StopMode::pulse_end);
        const auto pts = sorted_points(cfg.sweep);

        PointSetup setup;
        AlphaChoice base;
        std::string skip;
        const bool ready = guarded("curve '" + label + "'", skip, [&] {
            setup = prepare_point(cfg);
            if (cfg.sweep.relative || cfg.alpha_mode != config::AlphaMode::fixed)
                base = matched_alpha(setup, cfg.weighting, cfg.grid_per_tau);
        });

        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto t_start = Clock::now();
            SweepRow row;
            row.curve = label;
            row.axis = config::to_string(cfg.sweep.axis);
            row.value = pts[i].value;
            row.point_seed = trajectories::trajectory_seed(cfg.base_seed, i);
            row.n_traj = cfg.n_traj;
            if (!ready) {
                row.status = "skipped";
                out.notes.push_back(point_label(label, "alpha_in_p_sq", row.value) + ": " + skip);
            } else {
                const RunConfig point_cfg =
                    pts[i].patch.empty() ? cfg : config::with_patch(cfg, pts[i].patch);
                const bool patched = !pts[i].patch.empty();
                std::string reason;
                const bool ok = guarded(point_label(label, "alpha_in_p_sq", row.value), reason,
                                        [&] {
                    PointSetup local = patched ? prepare_point(point_cfg) : setup;
                    AlphaChoice a = patched ? matched_alpha(local, point_cfg.weighting, point_cfg.grid_per_tau) : base;
                    const double a2 = cfg.sweep.relative ? pts[i].value * a.matched_alpha_sq
                                                         : pts[i].value;
                    const PointResult r = evaluate_point(local, point_cfg, a2, stop,
                                                         row.point_seed, opt.threads);
                    fill_row(row, local, a, r, point_cfg.n_traj);
                });
                if (!ok) {
                    row.status = "skipped";
                    out.notes.push_back(point_label(label, "alpha_in_p_sq", row.value) + ": " +
                                        reason);
                }
            }
            out.rows.push_back(row);
            out.wall_seconds.push_back(
                std::chrono::duration<double>(Clock::now() - t_start).count());
            report(opt, point_label(label, "alpha_in_p_sq", row.value) +
                            ": im=" + std::to_string(row.im_probability) +
                            " p_ryd=" + std::to_string(row.p_ryd_deterministic));
        }
    }
    return out;
}

SweepResult run_efficiency_sweep(const RunConfig& c, const SweepOptions& opt) {
    c.validate();
    using config::SweepAxis;
    const SweepAxis axis = c.sweep.axis;
    if (axis != SweepAxis::cbar_bp && axis != SweepAxis::dbar_bp && axis != SweepAxis::C_c &&
        axis != SweepAxis::d_c)
        throw ConfigError("efficiency sweep needs axis cbar_bp, dbar_bp, C_c or d_c");
    SweepResult out;
    out.name = c.name;
    out.kind = "efficiency";
    out.settings = {{"scan", scan_json(opt.scan)}, {"curves", json::array()}};
    const char* axis_name = config::to_string(axis);

    for (const auto& [label, cfg] : config::expand_curves(c)) {
        out.settings["curves"].push_back({{"label", label}, {"config", config::to_json(cfg)}});
        const auto stop = resolve_stop(cfg.stop, trajectories::StopMode::threshold);
        const auto pts = sorted_points(cfg.sweep);
        const bool bar_axis = axis == SweepAxis::cbar_bp || axis == SweepAxis::dbar_bp;

        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto t_start = Clock::now();
            SweepRow row;
            row.curve = label;
            row.axis = axis_name;
            row.value = pts[i].value;
            row.point_seed = trajectories::trajectory_seed(cfg.base_seed, i);
            row.n_traj = cfg.n_traj;

            json patch = pts[i].patch.empty() ? json::object() : pts[i].patch;
            if (axis == SweepAxis::C_c)
                patch["control"]["C_c"] = pts[i].value;
            else if (axis == SweepAxis::d_c)
                patch["control"]["d_c"] = pts[i].value;

            std::vector<double> targets;
            if (bar_axis)
                targets.push_back(pts[i].value);
            else if (!cfg.bar_candidates.empty())
                targets = cfg.bar_candidates;
            else
                targets.push_back(-1.0); // keep the configured blockade setting

            bool any = false;
            std::string reasons;
            for (double target : targets) {
                json cand = patch;
                if (target > 0.0) {
                    cand["probe"]["target_bar"] = target;
                    cand["probe"]["blockade_ratio"] = nullptr;
                }
                const RunConfig point_cfg = config::with_patch(cfg, cand);
                std::string reason;
                SweepRow trial = row;
                const std::string where =
                    point_label(label, axis_name, row.value) +
                    (target > 0.0 ? " (target " + std::to_string(target) + ")" : "");
                const bool ok = guarded(where, reason, [&] {
                    const PointSetup setup = prepare_point(point_cfg);
                    const AlphaChoice a = choose_alpha(setup, point_cfg, opt.scan);
                    const PointResult r = evaluate_point(setup, point_cfg, a.alpha_sq, stop,
                                                         row.point_seed, opt.threads);
                    fill_row(trial, setup, a, r, point_cfg.n_traj);
                });
                if (!ok) {
                    reasons += (reasons.empty() ? "" : "; ") + reason;
                    continue;
                }
                if (!any || trial.efficiency > row.efficiency)
                    row = trial;
                any = true;
            }
            if (!any) {
                row.status = "skipped";
                out.notes.push_back(point_label(label, axis_name, row.value) + ": " + reasons);
            }
            out.rows.push_back(row);
            out.wall_seconds.push_back(
                std::chrono::duration<double>(Clock::now() - t_start).count());
            report(opt, point_label(label, axis_name, row.value) +
                            ": efficiency=" + std::to_string(row.efficiency) +
                            " bar=" + std::to_string(row.realized_bar));
        }
    }
    return out;
}

} // namespace rydswitch::sweeps
