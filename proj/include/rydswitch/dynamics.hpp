#pragma once

#include "rydswitch/channels.hpp"
#include "rydswitch/ensemble.hpp"
#include "rydswitch/errors.hpp"
#include "rydswitch/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace rydswitch::dynamics {

// Single-photon Gaussian wavepacket, |f(t)|^2 has standard deviation tau.
// The amplitude is normalised on [0, inf) so that the truncated leading edge
// does not leak probability.
struct GaussianPulse {
    double t0 = 5.0;
    double tau = 1.0;

    void validate() const;
    double amplitude(double t) const;
    // Probability that has not yet entered the system: int_t^inf |f|^2.
    double remaining(double t) const;
    // Time at which the pulse is considered over (classification, readout window).
    double end() const { return t0 + 5.0 * tau; }
    // Drive is switched off here; remaining() < 1e-14.
    double drive_off() const { return t0 + 8.0 * tau; }

    // tau = 1/(2 bandwidth), t0 = 5 tau; bandwidth is the rms width of |f(w)|^2.
    static GaussianPulse for_bandwidth(double bandwidth);
};

struct ControlParams {
    double g_c = 0.0;
    double omega_c = 0.0;
    std::optional<double> kappa_c; // cavity
    double gamma_ec = 1.0;
    double delta_big = 0.0;   // one-photon detuning
    double delta_small = 0.0; // two-photon detuning
    std::optional<double> d_c; // free space, total depth
    GaussianPulse pulse;

    void validate(Variant variant) const;
    // C_c = |g_c|^2 N / (kappa_c gamma_ec)
    double cooperativity(int n_atoms) const;
};

// Index map of the single-excitation amplitudes.
// cavity:    [a_c, e_0..e_{N-1}, r_0..r_{N-1}]
// freespace: [e_0..e_{N-1}, r_0..r_{N-1}]
struct Layout {
    Variant variant = Variant::cavity;
    int n_atoms = 0;

    bool has_cavity() const { return variant == Variant::cavity; }
    int e_offset() const { return has_cavity() ? 1 : 0; }
    int r_offset() const { return e_offset() + n_atoms; }
    int dim() const { return r_offset() + n_atoms; }
};

// No-jump generator: psi' = M psi + b f(t). The emitted (reflected or
// transmitted) field is out = o^T psi + output_sign * f(t); it and the
// e_c spontaneous decay are the terminating loss channels.
struct Generator {
    Layout layout;
    Eigen::MatrixXcd matrix;
    Eigen::VectorXcd drive;
    Eigen::VectorXcd output;
    double output_sign = 1.0;
    double gamma_e = 1.0; // amplitude decay of each e_l
    Eigen::VectorXd gamma_r;
    GaussianPulse pulse;

    // parameters kept for the O(dim) structured apply
    double kappa = 0.0;
    double coupling = 0.0; // g_c (cavity) or sqrt(2 kappa_1) (free space)
    double omega_c = 0.0;
    double delta_big = 0.0;
    double delta_small = 0.0;
    double fs_forward_rate = 0.0; // kappa_1 per atom, free space

    int dim() const { return layout.dim(); }

    // M psi without forming the dense matrix.
    void apply(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const;

    cplx output_amplitude(const Eigen::VectorXcd& psi, double f) const;
    double cavity_population(const Eigen::VectorXcd& psi) const;
    double excited_population(const Eigen::VectorXcd& psi) const;
    double rydberg_population(const Eigen::VectorXcd& psi) const;
    double atomic_loss_rate(const Eigen::VectorXcd& psi) const;
    double dephasing_loss_rate(const Eigen::VectorXcd& psi) const;
    double total_loss_rate(const Eigen::VectorXcd& psi, double f) const;
    // Upper bound of the total jump rate for any normalised state.
    double max_loss_rate() const;
};

Generator build_generator_cavity(const ensemble::AtomEnsemble& ens, const ControlParams& control,
                                 const channels::JumpChannelSet& channels);
Generator build_generator_fs(const ensemble::AtomEnsemble& ens, const ControlParams& control,
                             const channels::JumpChannelSet& channels);
Generator build_generator(Variant variant, const ensemble::AtomEnsemble& ens,
                          const ControlParams& control, const channels::JumpChannelSet& channels);

// Same generator with a different dephasing profile.
Generator with_dephasing(const Generator& g, const Eigen::VectorXd& gamma_r);

// Per-atom forward emission rate that reproduces amplitude transmission
// exp(-d_c1) through one atom on resonance.
double forward_rate_per_atom(double d_c1, double gamma_e);

struct ControlState {
    Eigen::VectorXcd psi;
    double t = 0.0;
    double drive_weight = 1.0; // amplitude of the not-yet-arrived pulse

    static ControlState vacuum(const Generator& g);
    // ||psi||^2 plus the probability still in the incoming pulse
    double norm2(const Generator& g) const;
};

// ---------------------------------------------------------------------------
// Adaptive Dormand-Prince 5(4)

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double min_step = 1e-12;
};

// Integrates y' = rhs(t, y) from t0 to t1 in place. `step` carries the
// suggested step size between calls (0 lets the integrator pick one).
template <class Rhs>
void integrate_adaptive(Rhs&& rhs, double t0, double t1, Eigen::VectorXcd& y,
                        const IntegratorOptions& opt, double& step);

// As above, but stops at the first time where event(t, y) <= 0, located on
// the continuous extension of the accepted step; y then holds the state at
// t_event. Returns false if no event occurs before t1.
template <class Rhs, class Event>
bool integrate_until(Rhs&& rhs, Event&& event, double t0, double t1, Eigen::VectorXcd& y,
                     double& t_event, const IntegratorOptions& opt, double& step);

// Advance the no-jump dynamics by dt.
ControlState propagate_nojump(const Generator& g, const ControlState& state, double dt,
                              const IntegratorOptions& opt = {});

IntegratorOptions default_integrator_options(const Generator& g);

// ---------------------------------------------------------------------------
// Deterministic (no-jump, unnormalised) run driven by the full pulse

struct TimeSample {
    double t;
    cplx cavity;
    double excited;
    double rydberg;
    double output2;
};

struct LinearRunOptions {
    double t_end = 0.0;     // 0 means pulse end
    double sample_dt = 0.0; // 0 disables the time series
    IntegratorOptions integrator;
    bool default_integrator = true;
};

struct LinearRun {
    std::vector<TimeSample> series;
    double emitted = 0.0;     // int |out|^2 (reflected or transmitted)
    double spontaneous = 0.0; // 2 gamma_e int sum |e|^2
    double dephasing = 0.0;   // sum_k 2 gamma_r[k] int |r_k|^2
    double residual = 0.0;    // ||psi(T)||^2 + remaining pulse
    double storage_probability = 0.0; // dephasing(0..pulse end) + sum|r(pulse end)|^2
    double rydberg_at_pulse_end = 0.0;
    Eigen::VectorXd rydberg_weights; // int_0^{pulse end} |r_k|^2 dt
    Eigen::VectorXcd final_state;
    double t_end = 0.0;

    double balance() const { return emitted + spontaneous + dephasing + residual; }
};

LinearRun linear_run(const Generator& g, const LinearRunOptions& opt = {});

cplx output_field(const Generator& g, const Eigen::VectorXcd& psi, double f);

double storage_probability(const LinearRun& run);

// ---------------------------------------------------------------------------

namespace detail {

inline double error_norm(const Eigen::VectorXcd& err, const Eigen::VectorXcd& y0,
                         const Eigen::VectorXcd& y1, const IntegratorOptions& opt) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        double scale = opt.atol + opt.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        double q = std::abs(err(i)) / scale;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(1, err.size())));
}

} // namespace detail

template <class Rhs, class Event>
bool integrate_until(Rhs&& rhs, Event&& event, double t0, double t1, Eigen::VectorXcd& y,
                     double& t_event, const IntegratorOptions& opt, double& step) {
    t_event = t0;
    if (event(t0, y) <= 0.0)
        return true;
    if (t1 <= t0)
        return false;
    // Dormand-Prince tableau
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    // continuous extension
    constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                     d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                     d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

    const Eigen::Index n = y.size();
    Eigen::VectorXcd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y1(n), err(n);

    double t = t0;
    double h = step > 0.0 ? step : std::min(opt.max_step, 1e-3 * (t1 - t0) + 1e-6);
    h = std::min(h, opt.max_step);
    rhs(t, y, k1);
    while (t < t1) {
        bool last = false;
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }
        tmp = y + h * a21 * k1;
        rhs(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, tmp, k6);
        y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + h, y1, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double en = detail::error_norm(err, y, y1, opt);
        if (!std::isfinite(en))
            throw NumericalError("integrate_adaptive: non-finite state");
        if (en > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            if (h < opt.min_step)
                throw NumericalError("integrate_adaptive: step size underflow");
            continue;
        }
        const double t_new = last ? t1 : t + h;
        if (event(t_new, y1) <= 0.0) {
            // locate the root on the dense-output polynomial
            Eigen::VectorXcd r2 = y1 - y;
            Eigen::VectorXcd r3 = h * k1 - r2;
            Eigen::VectorXcd r4 = r2 - h * k7 - r3;
            Eigen::VectorXcd r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            auto at = [&](double th) {
                return Eigen::VectorXcd(y + th * (r2 + (1.0 - th) * (r3 + th * (r4 + (1.0 - th) * r5))));
            };
            double lo = 0.0, hi = 1.0;
            double glo = event(t, y), ghi = event(t_new, y1);
            for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
                // regula falsi step, bisection if it stalls
                double th = glo / (glo - ghi) * (hi - lo) + lo;
                if (!(th > lo + 0.01 * (hi - lo) && th < hi - 0.01 * (hi - lo)))
                    th = 0.5 * (lo + hi);
                const double gv = event(t + th * h, at(th));
                if (gv > 0.0) {
                    lo = th;
                    glo = gv;
                } else {
                    hi = th;
                    ghi = gv;
                    if (gv == 0.0)
                        break;
                }
            }
            t_event = t + hi * h;
            y = at(hi);
            return true;
        }
        t = t_new;
        y.swap(y1);
        k1.swap(k7);
        double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        if (!last)
            step = std::min(h * factor, opt.max_step);
        h = std::min(h * factor, opt.max_step);
    }
    t_event = t1;
    return false;
}

template <class Rhs>
void integrate_adaptive(Rhs&& rhs, double t0, double t1, Eigen::VectorXcd& y,
                        const IntegratorOptions& opt, double& step) {
    double t_event = t0;
    integrate_until(std::forward<Rhs>(rhs), [](double, const Eigen::VectorXcd&) { return 1.0; },
                    t0, t1, y, t_event, opt, step);
}

} // namespace rydswitch::dynamics
