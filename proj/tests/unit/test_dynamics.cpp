#include "support.hpp"

#include "rydswitch/analytics.hpp"
#include "rydswitch/config.hpp"
#include "rydswitch/dynamics.hpp"
#include "rydswitch/propagator.hpp"
#include "rydswitch/sweeps.hpp"

#include <doctest.h>

#include <array>

using namespace rydswitch;
using namespace rydswitch::dynamics;
using testing::Gen;

namespace {

struct CavitySpec {
    int n = 1;
    double C_c = 0.0;
    double kappa = 1.0;
    double delta_big = 0.0;
    double omega_c = 0.0;
    double delta_small = 0.0;
    double tau = 5.0;
};

Generator cavity(const CavitySpec& s, const channels::JumpChannelSet* ch = nullptr) {
    ensemble::EnsembleGeometry geom;
    geom.n_atoms = s.n;
    geom.seed = 1;
    const auto ens = ensemble::make_ensemble(geom, 1.0);
    ControlParams c;
    c.kappa_c = s.kappa;
    c.gamma_ec = 1.0;
    c.g_c = std::sqrt(s.C_c * s.kappa / s.n);
    c.delta_big = s.delta_big;
    c.omega_c = s.omega_c;
    c.delta_small = s.delta_small;
    c.pulse = GaussianPulse{5.0 * s.tau, s.tau};
    return build_generator_cavity(ens, c, ch ? *ch : channels::JumpChannelSet::none(s.n));
}

Generator chain(int n, double d_c, double delta_big, double omega_c = 0.0, double tau = 5.0) {
    ensemble::EnsembleGeometry geom;
    geom.kind = ensemble::GeometryKind::gaussian1d;
    geom.n_atoms = n;
    geom.seed = 1;
    const auto ens = ensemble::make_ensemble(geom, 1.0);
    ControlParams c;
    c.d_c = d_c;
    c.gamma_ec = 1.0;
    c.delta_big = delta_big;
    c.omega_c = omega_c;
    c.pulse = GaussianPulse{5.0 * tau, tau};
    return build_generator_fs(ens, c, channels::JumpChannelSet::none(n));
}

// Resonant amplitude transmission of a weak cw drive.
cplx cw_transmission(const Generator& g) {
    const Eigen::VectorXcd psi = -g.matrix.partialPivLu().solve(g.drive);
    return g.output.cwiseProduct(psi).sum() + g.output_sign;
}

// N = 1, Delta = delta = gamma_r = 0: a, e, r amplitudes written out by hand and
// integrated with classical RK4 on a fine fixed grid.
double three_level_storage(double g, double kappa, double omega, const GaussianPulse& pulse) {
    using V = std::array<cplx, 3>;
    auto rhs = [&](double t, const V& y) {
        const double f = t < pulse.drive_off() ? pulse.amplitude(t) : 0.0;
        return V{-kappa * y[0] + I * g * y[1] + std::sqrt(2.0 * kappa) * f,
                 -1.0 * y[1] + I * g * y[0] + I * omega * y[2], I * omega * y[1]};
    };
    V y{};
    const double t_end = pulse.end();
    const int steps = 200000;
    const double h = t_end / steps;
    for (int i = 0; i < steps; ++i) {
        const double t = i * h;
        auto add = [](const V& a, const V& b, double s) {
            return V{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]};
        };
        const V k1 = rhs(t, y);
        const V k2 = rhs(t + h / 2, add(y, k1, h / 2));
        const V k3 = rhs(t + h / 2, add(y, k2, h / 2));
        const V k4 = rhs(t + h, add(y, k3, h));
        for (int c = 0; c < 3; ++c)
            y[static_cast<std::size_t>(c)] += h / 6.0 *
                (k1[static_cast<std::size_t>(c)] + 2.0 * k2[static_cast<std::size_t>(c)] +
                 2.0 * k3[static_cast<std::size_t>(c)] + k4[static_cast<std::size_t>(c)]);
    }
    return std::norm(y[2]);
}

config::RunConfig small_cavity_config(double C_c) {
    return config::parse(R"({
      "name": "unit", "variant": "cavity",
      "ensemble": {"kind": "gaussian3d", "n_atoms": 24, "sigma": 1.0, "seed": 5},
      "probe": {"omega_p": 5.0, "kappa_p": 1.0, "gamma_ep": 1.0, "c_p1": 0.1, "target_bar": 0.5},
      "control": {"C_c": )" + std::to_string(C_c) + R"(, "kappa_c": 1.0, "gamma_ec": 1.0,
                  "delta_big": 180.0, "omega_c": 5.0, "delta_small": "dressed"},
      "n_traj": 100, "base_seed": 7, "alpha_mode": "matched", "im_weighting": "weighted"})");
}

} // namespace

TEST_SUITE("dynamics") {

TEST_CASE("pulse is normalised on the half line") {
    const auto p = GaussianPulse::for_bandwidth(0.1);
    CHECK(p.tau == doctest::Approx(5.0));
    CHECK(p.t0 == doctest::Approx(25.0));
    CHECK(p.remaining(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.remaining(p.drive_off()) < 1e-14);
    // trapezoid integral of |f|^2
    double acc = 0.0;
    const int n = 20000;
    const double h = p.drive_off() / n;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * std::pow(p.amplitude(i * h), 2);
    }
    CHECK(acc * h == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("integrator: pure decay over ten lifetimes") {
    const double gamma = 0.7;
    Eigen::VectorXcd y = Eigen::VectorXcd::Constant(3, cplx(0.6, -0.2));
    const double n0 = y.squaredNorm();
    double step = 0.0;
    integrate_adaptive([&](double, const Eigen::VectorXcd& v, Eigen::VectorXcd& dv) { dv = -gamma * v; },
                       0.0, 10.0 / gamma, y, IntegratorOptions{1e-10, 1e-16}, step);
    CHECK(std::abs(y.squaredNorm() / n0 - std::exp(-20.0)) < 1e-7 * std::exp(-20.0));
}

TEST_CASE("integrator: event located on the dense output") {
    Eigen::VectorXcd y = Eigen::VectorXcd::Constant(1, 1.0);
    double step = 0.0, t_event = 0.0;
    const bool hit = integrate_until(
        [](double, const Eigen::VectorXcd& v, Eigen::VectorXcd& dv) { dv = -v; },
        [](double, const Eigen::VectorXcd& v) { return v.squaredNorm() - 0.25; }, 0.0, 5.0, y,
        t_event, IntegratorOptions{}, step);
    CHECK(hit);
    CHECK(t_event == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(y.squaredNorm() == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("structured apply matches the dense matrix") {
    Gen gen(5);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = gen.integer(1, 15);
        Generator g = trial % 2 == 0
                          ? cavity({n, gen.uniform(0.5, 30.0), gen.uniform(0.5, 3.0),
                                    gen.uniform(-20.0, 20.0), gen.uniform(0.0, 4.0),
                                    gen.uniform(-1.0, 1.0), 5.0})
                          : chain(n, gen.uniform(0.5, 20.0), gen.uniform(-20.0, 20.0),
                                  gen.uniform(0.0, 4.0));
        Eigen::VectorXd rates(n);
        for (int k = 0; k < n; ++k)
            rates(k) = gen.uniform(0.0, 0.5);
        g = with_dephasing(g, rates);
        const Eigen::VectorXcd psi = gen.complex_vector(g.dim());
        Eigen::VectorXcd out;
        g.apply(psi, out);
        CHECK((out - g.matrix * psi).norm() < 1e-12 * (1.0 + out.norm()));
    }
}

TEST_CASE("empty cavity reflects the whole pulse") {
    const Generator g = cavity({3, 0.0, 1.0, 0.0, 0.0, 0.0, 50.0});
    LinearRunOptions opt;
    opt.t_end = g.pulse.drive_off() + 20.0;
    opt.sample_dt = 25.0;
    const auto run = linear_run(g, opt);
    CHECK(run.emitted == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(run.storage_probability == doctest::Approx(0.0));
    // slow pulse: |alpha_out| follows |f|
    for (const auto& s : run.series)
        if (s.t < g.pulse.drive_off())
            CHECK(std::abs(s.output2 - std::pow(g.pulse.amplitude(s.t), 2)) < 1e-3);
}

TEST_CASE("Rydberg amplitudes are frozen without control coupling") {
    const Generator g = cavity({4, 10.0, 1.0, 5.0, 0.0, 0.0, 5.0});
    ControlState s = ControlState::vacuum(g);
    s.drive_weight = 0.0;
    Gen gen(8);
    for (int k = 0; k < 4; ++k)
        s.psi(g.layout.r_offset() + k) = gen.complex();
    s.psi(0) = 0.3;
    const auto out = propagate_nojump(g, s, 7.0);
    CHECK((out.psi.tail(4) - s.psi.tail(4)).norm() < 1e-14);
}

TEST_CASE("single atom storage matches a hand-written three-level integration") {
    for (double bw : {0.05, 0.2, 0.8}) {
        const double C = 4.0, omega = 0.8;
        const Generator g = cavity({1, C, 1.0, 0.0, omega, 0.0, 1.0 / (2.0 * bw)});
        const double oracle = three_level_storage(std::sqrt(C), 1.0, omega, g.pulse);
        const auto run = linear_run(g);
        CHECK(run.storage_probability == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(propagator::grid_storage(g).storage_probability == doctest::Approx(oracle).epsilon(1e-6));
    }
}

TEST_CASE("weak free-space medium transmits the pulse unchanged") {
    const Generator g = chain(5, 1e-9, 0.0, 1.0);
    LinearRunOptions opt;
    opt.t_end = g.pulse.drive_off();
    const auto run = linear_run(g, opt);
    CHECK(run.emitted == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(run.storage_probability < 1e-8);
}

TEST_CASE("two-atom chain transmission is the product of single-atom transmissions") {
    for (double delta : {0.0, 0.4, -1.3}) {
        const cplx t1 = cw_transmission(chain(1, 0.1, delta));
        const cplx t2 = cw_transmission(chain(2, 0.2, delta));
        CHECK(testing::rel(t2, t1 * t1) < 1e-12);
    }
    CHECK(std::abs(cw_transmission(chain(2, 0.2, 0.0)) - cplx(std::exp(-0.2))) < 1e-12);
}

TEST_CASE("norm bookkeeping closes for random parameters") {
    Gen gen(31);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = gen.integer(1, 8);
        Generator g = trial % 2 == 0
                          ? cavity({n, gen.uniform(1.0, 30.0), gen.uniform(0.5, 3.0),
                                    gen.uniform(2.0, 20.0), gen.uniform(0.5, 3.0),
                                    gen.uniform(-0.5, 0.5), gen.uniform(1.0, 6.0)})
                          : chain(n, gen.uniform(1.0, 20.0), gen.uniform(2.0, 20.0),
                                  gen.uniform(0.5, 3.0), gen.uniform(1.0, 6.0));
        Eigen::VectorXd rates(n);
        for (int k = 0; k < n; ++k)
            rates(k) = gen.uniform(0.0, 0.5);
        g = with_dephasing(g, rates);
        LinearRunOptions opt;
        opt.t_end = g.pulse.end() + 3.0;
        const auto run = linear_run(g, opt);
        CHECK(std::abs(run.balance() - 1.0) < 1e-6);
    }
}

TEST_CASE("dynamics are linear in the drive amplitude") {
    const Generator g = cavity({5, 20.0, 1.0, 10.0, 2.0, 0.4, 3.0});
    ControlState a = ControlState::vacuum(g);
    ControlState b = a;
    b.drive_weight = 2.5;
    const IntegratorOptions tight{1e-11, 1e-14};
    const auto pa = propagate_nojump(g, a, g.pulse.t0, tight);
    const auto pb = propagate_nojump(g, b, g.pulse.t0, tight);
    CHECK((pb.psi - 2.5 * pa.psi).norm() < 1e-8 * pb.psi.norm());
}

TEST_CASE("a global channel phase changes nothing") {
    const auto c = small_cavity_config(10.0);
    const auto p = sweeps::prepare_point(c);
    const auto ch = p.channels_at(0.01);
    const auto rotated = ch.scaled(std::polar(1.0, 1.1));
    CHECK((rotated.gamma_r - ch.gamma_r).norm() < 1e-15 * ch.gamma_r.norm());
    const auto ga = build_generator(p.variant, p.ens, p.control, ch);
    const auto gb = build_generator(p.variant, p.ens, p.control, rotated);
    CHECK((ga.matrix - gb.matrix).norm() < 1e-14 * ga.matrix.norm());
    CHECK(propagator::grid_storage(ga).storage_probability ==
          doctest::Approx(propagator::grid_storage(gb).storage_probability).epsilon(1e-12));
}

TEST_CASE("impedance matching suppresses the reflection") {
    const auto c = small_cavity_config(20.0);
    const auto p = sweeps::prepare_point(c);
    const auto a = sweeps::choose_alpha(p, c);
    const Generator g = p.generator_at(a.alpha_sq);
    const auto matched = linear_run(g);
    CHECK(matched.emitted < 0.05);

    auto detuned_control = p.control;
    detuned_control.delta_small += 10.0 * p.gamma_out;
    const Generator gd = build_generator(p.variant, p.ens, detuned_control, p.channels_at(a.alpha_sq));
    CHECK(linear_run(gd).emitted > 0.5);
}

TEST_CASE("storage probability: no control, and the single-cooperativity bound") {
    const Generator g = cavity({3, 10.0, 1.0, 20.0, 0.0, 0.0, 5.0});
    CHECK(linear_run(g).storage_probability == doctest::Approx(0.0));

    // uniform dephasing equal to gamma_out at C_c = 1
    auto c = small_cavity_config(1.0);
    const auto p = sweeps::prepare_point(c);
    const Generator base = dynamics::build_generator(p.variant, p.ens, p.control,
                                                     channels::JumpChannelSet::none(p.ens.size()));
    const Generator matched =
        with_dephasing(base, Eigen::VectorXd::Constant(p.ens.size(), p.gamma_out));
    const double prob = propagator::grid_storage(matched).storage_probability;
    CHECK(std::abs(prob - 4.0 / 9.0) < 0.2 * 4.0 / 9.0);
}

} // TEST_SUITE

TEST_SUITE("propagator") {

TEST_CASE("Simpson weights integrate cubics exactly") {
    for (int n : {2, 3, 4, 7, 10}) {
        const double h = 0.37;
        const auto w = propagator::simpson_weights(n, h);
        REQUIRE(w.size() == static_cast<std::size_t>(n + 1));
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double x = i * h;
            acc += w[static_cast<std::size_t>(i)] * (1.0 - 2.0 * x + 3.0 * x * x * x);
        }
        const double b = n * h;
        CHECK(acc == doctest::Approx(b - b * b + 0.75 * b * b * b * b).epsilon(1e-12));
    }
}

TEST_CASE("grid step puts the pulse end on a node") {
    const GaussianPulse p{12.5, 2.5};
    int n_pe = 0;
    const double h = propagator::pulse_grid_step(p, 64, n_pe);
    CHECK(n_pe * h == doctest::Approx(p.end()).epsilon(1e-14));
    CHECK(h <= p.tau / 64.0 + 1e-15);
}

TEST_CASE("free steps agree with the adaptive integrator") {
    const Generator g = cavity({6, 20.0, 1.0, 15.0, 2.0, 0.3, 4.0});
    const propagator::GridPropagator grid(g, 0.2, 8);
    Gen gen(17);
    const Eigen::VectorXcd psi = gen.complex_vector(g.dim());
    Eigen::VectorXcd fine = psi, next;
    for (int i = 0; i < 8; ++i) {
        grid.free_step(fine, next);
        fine.swap(next);
    }
    Eigen::VectorXcd coarse;
    grid.coarse(psi, coarse);
    ControlState s;
    s.psi = psi;
    s.drive_weight = 0.0;
    const auto ref = propagate_nojump(g, s, 1.6, IntegratorOptions{1e-12, 1e-14});
    CHECK((coarse - ref.psi).norm() < 1e-8 * ref.psi.norm());
    CHECK((fine - coarse).norm() < 1e-10 * ref.psi.norm());
}

TEST_CASE("grid storage agrees with the adaptive linear run") {
    const auto c = small_cavity_config(10.0);
    const auto p = sweeps::prepare_point(c);
    const auto a = sweeps::choose_alpha(p, c);
    const Generator g = p.generator_at(a.alpha_sq);
    const auto grid = propagator::grid_storage(g);
    const auto run = linear_run(g);
    CHECK(grid.storage_probability == doctest::Approx(run.storage_probability).epsilon(1e-6));
    CHECK(grid.rydberg_at_pulse_end == doctest::Approx(run.rydberg_at_pulse_end).epsilon(1e-6));
    CHECK((grid.rydberg_weights - run.rydberg_weights).norm() <
          1e-5 * run.rydberg_weights.norm());
}

} // TEST_SUITE
