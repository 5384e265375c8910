#include "support.hpp"

#include "rydswitch/config.hpp"
#include "rydswitch/errors.hpp"
#include "rydswitch/oracle.hpp"
#include "rydswitch/propagator.hpp"
#include "rydswitch/sweeps.hpp"
#include "rydswitch/trajectories.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace rydswitch;
using namespace rydswitch::trajectories;
using testing::Gen;

namespace {

config::RunConfig point_config(int n_atoms, double C_c, double target_bar) {
    return config::parse(R"({
      "name": "unit", "variant": "cavity",
      "ensemble": {"kind": "gaussian3d", "n_atoms": )" + std::to_string(n_atoms) + R"(, "sigma": 1.0, "seed": 5},
      "probe": {"omega_p": 5.0, "kappa_p": 1.0, "gamma_ep": 1.0, "c_p1": 0.1, "target_bar": )" +
                         std::to_string(target_bar) + R"(},
      "control": {"C_c": )" + std::to_string(C_c) + R"(, "kappa_c": 1.0, "gamma_ec": 1.0,
                  "delta_big": 180.0, "omega_c": 5.0, "delta_small": "dressed"},
      "n_traj": 100, "base_seed": 7, "alpha_mode": "matched", "im_weighting": "weighted"})");
}

struct Point {
    sweeps::PointSetup setup;
    double alpha_sq;
};

Point matched_point(int n_atoms, double C_c, double target_bar) {
    const auto c = point_config(n_atoms, C_c, target_bar);
    Point p{sweeps::prepare_point(c), 0.0};
    p.alpha_sq = sweeps::choose_alpha(p.setup, c).alpha_sq;
    return p;
}

TrajectoryEngine engine_for(const Point& p, StopMode stop) {
    const auto ch = p.setup.channels_at(p.alpha_sq);
    EngineOptions eo;
    eo.t_max = p.setup.t_max;
    eo.stop = stop;
    return TrajectoryEngine(p.setup.generator_at(p.alpha_sq), ch, eo);
}

channels::JumpChannelSet random_channels(Gen& gen, int n, int rows) {
    channels::JumpChannelSet ch = channels::JumpChannelSet::none(n);
    ch.coeffs.resize(rows, n);
    for (int j = 0; j < rows; ++j)
        for (int k = 0; k < n; ++k)
            ch.coeffs(j, k) = gen.complex();
    ch.kinds.assign(static_cast<std::size_t>(rows), channels::ChannelKind::spontaneous);
    ch.atoms.assign(static_cast<std::size_t>(rows), 0);
    ch.gamma_r = channels::dephasing_rates(ch.coeffs);
    return ch;
}

double inverse_participation(const Eigen::VectorXcd& r) {
    const double total = r.squaredNorm();
    double acc = 0.0;
    for (int k = 0; k < r.size(); ++k)
        acc += std::pow(std::norm(r(k)) / total, 2);
    return acc;
}

} // namespace

TEST_SUITE("trajectories") {

TEST_CASE("jump application matches the dense operator") {
    Gen gen(8);
    const dynamics::Layout layout{Variant::cavity, 8};
    const auto ch = random_channels(gen, 8, 5);
    for (int j = 0; j < ch.size(); ++j) {
        const Eigen::VectorXcd psi = gen.complex_vector(layout.dim());
        Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(layout.dim(), layout.dim());
        for (int k = 0; k < 8; ++k)
            L(layout.r_offset() + k, layout.r_offset() + k) = ch.coeffs(j, k);
        const Eigen::VectorXcd expect = (L * psi).normalized();
        const Eigen::VectorXcd got = apply_jump(layout, psi, ch, j);
        CHECK((got - expect).norm() < 1e-14);
        CHECK(got.segment(layout.r_offset(), 8).squaredNorm() == doctest::Approx(1.0));
        CHECK(got.head(layout.r_offset()).isZero());
    }
}

TEST_CASE("uniform and single-atom jump operators") {
    Gen gen(9);
    const dynamics::Layout layout{Variant::freespace, 5};
    auto ch = channels::JumpChannelSet::none(5);
    ch.coeffs = Eigen::MatrixXcd::Constant(2, 5, cplx(0.3, 0.1));
    ch.coeffs.row(1).setZero();
    ch.coeffs(1, 3) = 2.0;
    ch.kinds = {channels::ChannelKind::readout, channels::ChannelKind::spontaneous};
    ch.atoms = {-1, 0};
    ch.gamma_r = channels::dephasing_rates(ch.coeffs);
    const Eigen::VectorXcd psi = gen.complex_vector(layout.dim());

    const Eigen::VectorXcd r0 = psi.segment(layout.r_offset(), 5).normalized();
    const Eigen::VectorXcd after = apply_jump(layout, psi, ch, 0).segment(layout.r_offset(), 5);
    CHECK(std::abs(std::abs(r0.dot(after)) - 1.0) < 1e-14);

    const Eigen::VectorXcd local = apply_jump(layout, psi, ch, 1).segment(layout.r_offset(), 5);
    CHECK(std::abs(local(3)) == doctest::Approx(1.0));
    CHECK(local.squaredNorm() == doctest::Approx(1.0));

    Eigen::VectorXcd no_r = psi;
    no_r.segment(layout.r_offset(), 5).setZero();
    CHECK_THROWS_AS(apply_jump(layout, no_r, ch, 0), ImpossibleJumpError);
}

TEST_CASE("spontaneous jumps localise on the emitting cluster") {
    Eigen::MatrixX3d pos(8, 3);
    pos << 0.00, 0.00, 0.0, 0.10, 0.00, 0.0, 0.00, 0.10, 0.0, 0.10, 0.10, 0.0, //
        3.00, 0.00, 0.0, 3.10, 0.00, 0.0, 3.00, 0.10, 0.0, 3.10, 0.10, 0.0;
    const auto ens = testing::ensemble_at(pos, 1.0);
    ensemble::ProbeParams probe;
    probe.kappa_p = 1.0;
    probe.g_p = 0.3;
    probe.omega_p = 5.0;
    probe.alpha_in_p = 1.0;
    const auto ch = channels::cavity_channels(ens, probe);
    const dynamics::Layout layout{Variant::cavity, 8};
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(layout.dim());
    psi.segment(layout.r_offset(), 8).setConstant(1.0 / std::sqrt(8.0));
    const double before = inverse_participation(psi.segment(layout.r_offset(), 8));
    for (int l = 0; l < 4; ++l) {
        const Eigen::VectorXcd after = apply_jump(layout, psi, ch, l + 1);
        CHECK(inverse_participation(after.segment(layout.r_offset(), 8)) > before);
    }
}

TEST_CASE("without control or probe the photon is never stored") {
    const auto p = matched_point(6, 10.0, 0.5);
    auto control = p.setup.control;
    control.omega_c = 0.0;
    const auto none = channels::JumpChannelSet::none(6);
    EngineOptions eo;
    eo.t_max = 50.0;
    const TrajectoryEngine engine(dynamics::build_generator(Variant::cavity, p.setup.ens, control, none),
                                  none, eo);
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto rec = engine.run(trajectory_seed(3, s));
        REQUIRE(rec.events.size() == 1);
        CHECK(is_terminating(rec.events[0].kind));
        CHECK(rec.outcome == Outcome::never_stored);
        CHECK(rec.n_readout == 0);
    }
}

TEST_CASE("record invariants") {
    const auto p = matched_point(12, 20.0, 0.5);
    const auto engine = engine_for(p, StopMode::full);
    BatchOptions bo;
    bo.n_traj = 60;
    bo.base_seed = 4;
    bo.keep_records = true;
    const auto res = batch_run(engine, bo);
    int with_readout = 0;
    for (const auto& rec : res.records) {
        int readouts = 0;
        for (std::size_t i = 0; i < rec.events.size(); ++i) {
            if (i > 0)
                CHECK(rec.events[i].t > rec.events[i - 1].t);
            if (rec.events[i].kind == EventKind::readout)
                ++readouts;
            if (i + 1 < rec.events.size())
                CHECK_FALSE(is_terminating(rec.events[i].kind));
        }
        CHECK(readouts == rec.n_readout);
        if (rec.n_readout > 0) {
            ++with_readout;
            CHECK(rec.outcome == Outcome::stored_then_lost);
        }
        if (rec.terminated && rec.events.back().t < engine.generator().pulse.end() &&
            rec.events.size() == 1)
            CHECK(rec.outcome == Outcome::never_stored);
    }
    CHECK(with_readout > 0);
}

TEST_CASE("seed prefix property and thread independence") {
    const auto p = matched_point(10, 20.0, 0.5);
    const auto engine = engine_for(p, StopMode::threshold);
    BatchOptions bo;
    bo.n_traj = 16;
    bo.base_seed = 99;
    bo.keep_records = true;
    const auto small = batch_run(engine, bo);
    bo.n_traj = 32;
    bo.threads = 3;
    const auto large = batch_run(engine, bo);
    for (std::size_t i = 0; i < small.records.size(); ++i) {
        const auto& a = small.records[i];
        const auto& b = large.records[i];
        CHECK(a.seed == b.seed);
        REQUIRE(a.events.size() == b.events.size());
        for (std::size_t e = 0; e < a.events.size(); ++e) {
            CHECK(a.events[e].t == b.events[e].t);
            CHECK(a.events[e].kind == b.events[e].kind);
            CHECK(a.events[e].atom == b.events[e].atom);
        }
    }
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i)
        seeds.insert(trajectory_seed(5, i));
    CHECK(seeds.size() == 1000);
    CHECK(trajectory_seed(5, 0) != trajectory_seed(6, 0));
}

TEST_CASE("single trajectory gives 0/1 probabilities; efficiency falls with the threshold") {
    const auto p = matched_point(10, 20.0, 0.5);
    const auto engine = engine_for(p, StopMode::full);
    BatchOptions bo;
    bo.n_traj = 1;
    bo.base_seed = 1;
    const auto one = batch_run(engine, bo).stats;
    CHECK((one.im_probability == 0.0 || one.im_probability == 1.0));
    CHECK((one.efficiency == 0.0 || one.efficiency == 1.0));

    bo.n_traj = 80;
    bo.keep_records = true;
    const auto many = batch_run(engine, bo);
    double prev = 1.0;
    for (int n_th = 1; n_th <= 6; ++n_th) {
        const auto s = summarize(many.records, n_th, false);
        CHECK(s.efficiency <= prev);
        prev = s.efficiency;
        long total = 0;
        for (long h : s.histogram)
            total += h;
        CHECK(total == 80);
    }
}

TEST_CASE("impedance-matching estimate agrees with the deterministic storage probability") {
    const auto p = matched_point(24, 20.0, 0.5);
    const auto engine = engine_for(p, StopMode::pulse_end);
    BatchOptions bo;
    bo.n_traj = 10000;
    bo.base_seed = 2;
    const auto s = batch_run(engine, bo).stats;
    const double p_ryd = engine.deterministic_storage().storage_probability;
    CHECK(std::abs(s.im_probability - p_ryd) <= 2.0 * std::max(s.im_stderr, 1e-4));
}

TEST_CASE("strong dephasing spoils the storage") {
    const auto p = matched_point(12, 20.0, 0.5);
    const double matched = propagator::grid_storage(p.setup.generator_at(p.alpha_sq)).storage_probability;
    const double over = propagator::grid_storage(p.setup.generator_at(100.0 * p.alpha_sq)).storage_probability;
    CHECK(over < matched);
}

TEST_CASE("events csv") {
    TrajectoryRecord r;
    r.events = {{1.5, EventKind::readout, -1}, {2.0, EventKind::spontaneous, 3},
                {2.5, EventKind::atomic_decay, -1}};
    std::ostringstream os;
    write_events_csv(os, {r});
    const std::string text = os.str();
    CHECK(text.rfind("traj_id,t,kind,l\n", 0) == 0);
    CHECK(text.find("0,2,spontaneous,3") != std::string::npos);
}

} // TEST_SUITE

TEST_SUITE("oracle") {

TEST_CASE("without jump channels the oracle reproduces the linear run") {
    const auto p = matched_point(3, 10.0, 0.1);
    const auto none = channels::JumpChannelSet::none(3);
    const auto g = dynamics::build_generator(Variant::cavity, p.setup.ens, p.setup.control, none);
    dynamics::LinearRunOptions lo;
    lo.sample_dt = g.pulse.end() / 8.0;
    lo.integrator = {1e-10, 1e-13};
    lo.default_integrator = false;
    const auto run = dynamics::linear_run(g, lo);
    std::vector<double> times;
    for (const auto& s : run.series)
        times.push_back(s.t);
    const auto orc = oracle::master_equation_oracle(g, none, times);
    REQUIRE(orc.size() == run.series.size());
    for (std::size_t i = 0; i < orc.size(); ++i) {
        CHECK(orc[i].populations.cavity == doctest::Approx(std::norm(run.series[i].cavity)).epsilon(1e-6));
        CHECK(orc[i].populations.excited == doctest::Approx(run.series[i].excited).epsilon(1e-6));
        CHECK(orc[i].populations.rydberg == doctest::Approx(run.series[i].rydberg).epsilon(1e-6));
        CHECK(orc[i].readout == 0.0);
    }
}

TEST_CASE("oracle trace is conserved and the vacuum only fills up") {
    Gen gen(77);
    for (int trial = 0; trial < 3; ++trial) {
        const auto p = matched_point(2, gen.uniform(5.0, 30.0), 0.02);
        const auto ch = p.setup.channels_at(p.alpha_sq * gen.uniform(0.5, 2.0));
        const auto g = dynamics::build_generator(Variant::cavity, p.setup.ens, p.setup.control, ch);
        std::vector<double> times;
        for (int i = 0; i <= 12; ++i)
            times.push_back(i * g.pulse.end() / 10.0);
        const auto orc = oracle::master_equation_oracle(g, ch, times);
        double prev = -1.0;
        for (const auto& s : orc) {
            CHECK(s.trace == doctest::Approx(1.0).epsilon(1e-8));
            CHECK(s.populations.vacuum >= prev - 1e-10);
            prev = s.populations.vacuum;
        }
    }
}

TEST_CASE("oracle rejects large systems") {
    const auto p = matched_point(6, 10.0, 0.5);
    const auto ch = p.setup.channels_at(p.alpha_sq);
    CHECK_THROWS_AS(oracle::master_equation_oracle(p.setup.generator_at(p.alpha_sq), ch, {1.0}),
                    ConfigError);
}

} // TEST_SUITE
