#include "rydswitch/dynamics.hpp"

#include <cmath>
#include <string>

namespace rydswitch::dynamics {

namespace {

constexpr double sqrt_half_pi = 1.2533141373155002512; // sqrt(pi/2)

} // namespace

void GaussianPulse::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw ConfigError("pulse: tau must be positive");
    if (!(t0 >= 0.0) || !std::isfinite(t0))
        throw ConfigError("pulse: t0 must be nonnegative");
}

double GaussianPulse::amplitude(double t) const {
    if (t < 0.0)
        return 0.0;
    const double norm2 = 1.0 / (tau * sqrt_half_pi * std::erfc(-t0 / (std::sqrt(2.0) * tau)));
    const double x = t - t0;
    return std::sqrt(norm2) * std::exp(-x * x / (4.0 * tau * tau));
}

double GaussianPulse::remaining(double t) const {
    if (t <= 0.0)
        return 1.0;
    const double s = std::sqrt(2.0) * tau;
    return std::erfc((t - t0) / s) / std::erfc(-t0 / s);
}

GaussianPulse GaussianPulse::for_bandwidth(double bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw ConfigError("pulse: bandwidth must be positive");
    GaussianPulse p;
    p.tau = 1.0 / (2.0 * bandwidth);
    p.t0 = 5.0 * p.tau;
    return p;
}

void ControlParams::validate(Variant variant) const {
    if (!(gamma_ec > 0.0))
        throw ConfigError("control: gamma_ec must be positive");
    if (!std::isfinite(omega_c) || !std::isfinite(delta_big) || !std::isfinite(delta_small))
        throw ConfigError("control: non-finite omega_c or detuning");
    if (variant == Variant::cavity) {
        if (!kappa_c || !(*kappa_c > 0.0))
            throw ConfigError("control: cavity variant needs kappa_c > 0");
        if (!(g_c >= 0.0))
            throw ConfigError("control: g_c must be nonnegative");
    } else {
        if (!d_c || !(*d_c >= 0.0))
            throw ConfigError("control: free-space variant needs d_c >= 0");
    }
    pulse.validate();
}

double ControlParams::cooperativity(int n_atoms) const {
    if (!kappa_c)
        throw ConfigError("control: kappa_c not set");
    return g_c * g_c * n_atoms / (*kappa_c * gamma_ec);
}

double forward_rate_per_atom(double d_c1, double gamma_e) {
    return gamma_e * std::tanh(0.5 * d_c1);
}

// ---------------------------------------------------------------------------

void Generator::apply(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const {
    const int n = layout.n_atoms;
    const int eo = layout.e_offset();
    const int ro = layout.r_offset();
    out.resize(psi.size());
    const cplx de = -cplx(gamma_e + fs_forward_rate, delta_big);
    const cplx iom = I * omega_c;
    if (layout.has_cavity()) {
        cplx sum_e{0.0};
        for (int l = 0; l < n; ++l)
            sum_e += psi(eo + l);
        const cplx a = psi(0);
        out(0) = -kappa * a + I * coupling * sum_e;
        const cplx ga = I * coupling * a;
        for (int l = 0; l < n; ++l)
            out(eo + l) = de * psi(eo + l) + ga + iom * psi(ro + l);
    } else {
        const double s2 = coupling * coupling;
        cplx prefix{0.0};
        for (int l = 0; l < n; ++l) {
            out(eo + l) = de * psi(eo + l) - s2 * prefix + iom * psi(ro + l);
            prefix += psi(eo + l);
        }
    }
    for (int l = 0; l < n; ++l)
        out(ro + l) = -cplx(gamma_r(l), delta_small) * psi(ro + l) + iom * psi(eo + l);
}

cplx Generator::output_amplitude(const Eigen::VectorXcd& psi, double f) const {
    if (layout.has_cavity())
        return output(0) * psi(0) + output_sign * f;
    const int eo = layout.e_offset();
    cplx sum{0.0};
    for (int l = 0; l < layout.n_atoms; ++l)
        sum += psi(eo + l);
    return I * coupling * sum + output_sign * f;
}

double Generator::cavity_population(const Eigen::VectorXcd& psi) const {
    return layout.has_cavity() ? std::norm(psi(0)) : 0.0;
}

double Generator::excited_population(const Eigen::VectorXcd& psi) const {
    return psi.segment(layout.e_offset(), layout.n_atoms).squaredNorm();
}

double Generator::rydberg_population(const Eigen::VectorXcd& psi) const {
    return psi.segment(layout.r_offset(), layout.n_atoms).squaredNorm();
}

double Generator::atomic_loss_rate(const Eigen::VectorXcd& psi) const {
    return 2.0 * gamma_e * excited_population(psi);
}

double Generator::dephasing_loss_rate(const Eigen::VectorXcd& psi) const {
    const int ro = layout.r_offset();
    double acc = 0.0;
    for (int l = 0; l < layout.n_atoms; ++l)
        acc += 2.0 * gamma_r(l) * std::norm(psi(ro + l));
    return acc;
}

double Generator::total_loss_rate(const Eigen::VectorXcd& psi, double f) const {
    return std::norm(output_amplitude(psi, f)) + atomic_loss_rate(psi) +
           dephasing_loss_rate(psi);
}

double Generator::max_loss_rate() const {
    double gr = gamma_r.size() ? gamma_r.maxCoeff() : 0.0;
    return output.squaredNorm() + 2.0 * gamma_e + 2.0 * gr;
}

namespace {

void check_ensemble(const ensemble::AtomEnsemble& ens, const channels::JumpChannelSet& ch) {
    if (ens.size() < 1)
        throw ConfigError("generator: empty ensemble");
    if (ch.gamma_r.size() != ens.size())
        throw ConfigError("generator: channel set does not match the ensemble size");
}

void fill_rydberg_block(Generator& g) {
    const int n = g.layout.n_atoms;
    const int eo = g.layout.e_offset();
    const int ro = g.layout.r_offset();
    for (int l = 0; l < n; ++l) {
        g.matrix(eo + l, ro + l) = I * g.omega_c;
        g.matrix(ro + l, eo + l) = I * g.omega_c;
        g.matrix(ro + l, ro + l) = -cplx(g.gamma_r(l), g.delta_small);
    }
}

} // namespace

Generator build_generator_cavity(const ensemble::AtomEnsemble& ens, const ControlParams& control,
                                 const channels::JumpChannelSet& channels) {
    control.validate(Variant::cavity);
    check_ensemble(ens, channels);
    const int n = ens.size();
    Generator g;
    g.layout = Layout{Variant::cavity, n};
    g.gamma_e = control.gamma_ec;
    g.gamma_r = channels.gamma_r;
    g.pulse = control.pulse;
    g.kappa = *control.kappa_c;
    g.coupling = control.g_c;
    g.omega_c = control.omega_c;
    g.delta_big = control.delta_big;
    g.delta_small = control.delta_small;
    g.fs_forward_rate = 0.0;

    const int dim = g.dim();
    g.matrix = Eigen::MatrixXcd::Zero(dim, dim);
    g.matrix(0, 0) = -g.kappa;
    for (int l = 0; l < n; ++l) {
        g.matrix(0, 1 + l) = I * g.coupling;
        g.matrix(1 + l, 0) = I * g.coupling;
        g.matrix(1 + l, 1 + l) = -cplx(g.gamma_e, g.delta_big);
    }
    fill_rydberg_block(g);

    const double root = std::sqrt(2.0 * g.kappa);
    g.drive = Eigen::VectorXcd::Zero(dim);
    g.output = Eigen::VectorXcd::Zero(dim);
    g.drive(0) = root;
    g.output(0) = root;
    g.output_sign = -1.0;
    return g;
}

Generator build_generator_fs(const ensemble::AtomEnsemble& ens, const ControlParams& control,
                             const channels::JumpChannelSet& channels) {
    control.validate(Variant::freespace);
    check_ensemble(ens, channels);
    if (!ens.sorted_along_z())
        throw OrderingError("build_generator_fs: atoms must be sorted along z");
    const int n = ens.size();
    Generator g;
    g.layout = Layout{Variant::freespace, n};
    g.gamma_e = control.gamma_ec;
    g.gamma_r = channels.gamma_r;
    g.pulse = control.pulse;
    g.kappa = 0.0;
    g.fs_forward_rate = forward_rate_per_atom(*control.d_c / n, control.gamma_ec);
    g.coupling = std::sqrt(2.0 * g.fs_forward_rate);
    g.omega_c = control.omega_c;
    g.delta_big = control.delta_big;
    g.delta_small = control.delta_small;

    const int dim = g.dim();
    const double s2 = g.coupling * g.coupling;
    g.matrix = Eigen::MatrixXcd::Zero(dim, dim);
    for (int l = 0; l < n; ++l) {
        g.matrix(l, l) = -cplx(g.gamma_e + g.fs_forward_rate, g.delta_big);
        for (int m = 0; m < l; ++m)
            g.matrix(l, m) = -s2;
    }
    fill_rydberg_block(g);

    g.drive = Eigen::VectorXcd::Zero(dim);
    g.output = Eigen::VectorXcd::Zero(dim);
    for (int l = 0; l < n; ++l) {
        g.drive(l) = I * g.coupling;
        g.output(l) = I * g.coupling;
    }
    g.output_sign = 1.0;
    return g;
}

Generator build_generator(Variant variant, const ensemble::AtomEnsemble& ens,
                          const ControlParams& control, const channels::JumpChannelSet& channels) {
    return variant == Variant::cavity ? build_generator_cavity(ens, control, channels)
                                      : build_generator_fs(ens, control, channels);
}

Generator with_dephasing(const Generator& g, const Eigen::VectorXd& gamma_r) {
    if (gamma_r.size() != g.layout.n_atoms)
        throw ConfigError("with_dephasing: size mismatch");
    Generator out = g;
    out.gamma_r = gamma_r;
    fill_rydberg_block(out);
    return out;
}

ControlState ControlState::vacuum(const Generator& g) {
    ControlState s;
    s.psi = Eigen::VectorXcd::Zero(g.dim());
    s.t = 0.0;
    s.drive_weight = 1.0;
    return s;
}

double ControlState::norm2(const Generator& g) const {
    return psi.squaredNorm() + drive_weight * drive_weight * g.pulse.remaining(t);
}

cplx output_field(const Generator& g, const Eigen::VectorXcd& psi, double f) {
    return g.output_amplitude(psi, f);
}

IntegratorOptions default_integrator_options(const Generator& g) {
    IntegratorOptions opt;
    opt.max_step = std::min(0.05 / g.max_loss_rate(), g.pulse.tau / 8.0);
    return opt;
}

ControlState propagate_nojump(const Generator& g, const ControlState& state, double dt,
                              const IntegratorOptions& opt) {
    if (dt < 0.0)
        throw ConfigError("propagate_nojump: negative time step");
    ControlState out = state;
    const double w = state.drive_weight;
    const double t_off = g.pulse.drive_off();
    auto rhs = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        g.apply(y, dy);
        if (w != 0.0 && t < t_off)
            dy += (w * g.pulse.amplitude(t)) * g.drive;
    };
    double step = 0.0;
    integrate_adaptive(rhs, state.t, state.t + dt, out.psi, opt, step);
    out.t = state.t + dt;
    return out;
}

LinearRun linear_run(const Generator& g, const LinearRunOptions& opt) {
    const int n = g.layout.n_atoms;
    const int dim = g.dim();
    const int ro = g.layout.r_offset();
    const double t_pe = g.pulse.end();
    const double t_end = opt.t_end > 0.0 ? opt.t_end : t_pe;
    const double t_off = g.pulse.drive_off();
    const IntegratorOptions iopt = opt.default_integrator ? default_integrator_options(g)
                                                          : opt.integrator;

    // [psi | emitted, spontaneous, dephasing | per-atom int |r_k|^2]
    const int i_out = dim, i_sp = dim + 1, i_dp = dim + 2, i_w = dim + 3;
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim + 3 + n);
    bool weights_active = true;

    Eigen::VectorXcd psi(dim), dpsi(dim);
    auto rhs = [&](double t, const Eigen::VectorXcd& yy, Eigen::VectorXcd& dy) {
        psi = yy.head(dim);
        g.apply(psi, dpsi);
        const double f = t < t_off ? g.pulse.amplitude(t) : 0.0;
        if (f != 0.0)
            dpsi += f * g.drive;
        dy.resize(yy.size());
        dy.head(dim) = dpsi;
        dy(i_out) = std::norm(g.output_amplitude(psi, f));
        dy(i_sp) = g.atomic_loss_rate(psi);
        dy(i_dp) = g.dephasing_loss_rate(psi);
        for (int k = 0; k < n; ++k)
            dy(i_w + k) = weights_active ? std::norm(psi(ro + k)) : 0.0;
    };

    std::vector<double> stops;
    if (opt.sample_dt > 0.0)
        for (double t = 0.0; t < t_end; t += opt.sample_dt)
            stops.push_back(t);
    stops.push_back(std::min(t_pe, t_end));
    stops.push_back(t_end);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    LinearRun run;
    run.t_end = t_end;
    auto record_sample = [&](double t) {
        Eigen::VectorXcd s = y.head(dim);
        const double f = t < t_off ? g.pulse.amplitude(t) : 0.0;
        run.series.push_back({t, g.layout.has_cavity() ? s(0) : cplx{0.0},
                              g.excited_population(s), g.rydberg_population(s),
                              std::norm(g.output_amplitude(s, f))});
    };

    double t = 0.0;
    double step = 0.0;
    bool pe_done = false;
    for (double stop : stops) {
        integrate_adaptive(rhs, t, stop, y, iopt, step);
        t = stop;
        if (opt.sample_dt > 0.0)
            record_sample(t);
        if (!pe_done && t >= std::min(t_pe, t_end)) {
            pe_done = true;
            weights_active = false;
            Eigen::VectorXcd s = y.head(dim);
            run.rydberg_at_pulse_end = g.rydberg_population(s);
            run.storage_probability = y(i_dp).real() + run.rydberg_at_pulse_end;
            run.rydberg_weights = y.segment(i_w, n).real();
        }
    }

    run.final_state = y.head(dim);
    run.emitted = y(i_out).real();
    run.spontaneous = y(i_sp).real();
    run.dephasing = y(i_dp).real();
    run.residual = run.final_state.squaredNorm() + g.pulse.remaining(t_end);
    return run;
}

double storage_probability(const LinearRun& run) {
    return run.storage_probability;
}

} // namespace rydswitch::dynamics
