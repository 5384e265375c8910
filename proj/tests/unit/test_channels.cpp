#include "support.hpp"

#include "rydswitch/channels.hpp"
#include "rydswitch/errors.hpp"

#include <doctest.h>

using namespace rydswitch;
using namespace rydswitch::channels;
using ensemble::ProbeParams;
using testing::Gen;

namespace {

ProbeParams cavity_probe(double g_p, double omega_p, double alpha) {
    ProbeParams p;
    p.kappa_p = 1.0;
    p.g_p = g_p;
    p.omega_p = omega_p;
    p.gamma_ep = 1.0;
    p.alpha_in_p = alpha;
    return p;
}

ProbeParams fs_probe(double d_p1, double omega_p, double alpha) {
    ProbeParams p;
    p.d_p1 = d_p1;
    p.omega_p = omega_p;
    p.gamma_ep = 1.0;
    p.alpha_in_p = alpha;
    return p;
}

Eigen::VectorXd sorted_z(Gen& gen, int n) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i)
        z(i) = gen.uniform(0.0, 3.0);
    std::sort(z.data(), z.data() + n);
    return z;
}

// d e^{-d} (1 - e^{-m d}) / (1 - e^{-d}) - 1
cplx geometric_attenuation(double d, int m) {
    return d * std::exp(-d) * (1.0 - std::exp(-m * d)) / (1.0 - std::exp(-d)) - 1.0;
}

} // namespace

TEST_SUITE("channels") {

TEST_CASE("cavity channel layout") {
    Gen gen(3);
    const auto e = testing::ensemble_at(gen.positions(6), 1.0);
    const auto set = cavity_channels(e, cavity_probe(0.3, 2.0, 0.7));
    REQUIRE(set.size() == 7);
    CHECK(set.kinds[0] == ChannelKind::readout);
    CHECK(set.atoms[0] == -1);
    for (int l = 0; l < 6; ++l) {
        CHECK(set.kinds[static_cast<std::size_t>(l + 1)] == ChannelKind::spontaneous);
        CHECK(set.atoms[static_cast<std::size_t>(l + 1)] == l);
        CHECK(set.coeffs(l + 1, l) == cplx(0.0));
    }
}

TEST_CASE("cavity channels: trivial cases") {
    Eigen::MatrixX3d one = Eigen::MatrixX3d::Zero(1, 3);
    const auto single = cavity_channels(testing::ensemble_at(one, 1.0), cavity_probe(1.0, 1.0, 1.0));
    CHECK(single.coeffs(0, 0) == cplx(0.0));

    Gen gen(4);
    const auto e = testing::ensemble_at(gen.positions(5), 1.0);
    const auto off = cavity_channels(e, cavity_probe(0.3, 2.0, 0.0));
    CHECK(off.coeffs.isZero());
    CHECK(off.gamma_r.isZero());
}

TEST_CASE("cavity channels: two-atom hand evaluation") {
    Eigen::MatrixX3d pos(2, 3);
    pos << 0, 0, 0, 1, 0, 0;
    const double alpha = 0.8;
    const auto set = cavity_channels(testing::ensemble_at(pos, 1.0), cavity_probe(1.0, 1.0, alpha));
    const cplx cb(0.5, 0.5);
    const cplx readout = -2.0 * cb / cplx(1.5, 0.5) * alpha;
    CHECK(testing::rel(set.coeffs(0, 0), readout) < 1e-14);
    CHECK(testing::rel(set.coeffs(0, 1), readout) < 1e-14);
    // spontaneous emission of atom 1 acting on k = 0
    const cplx spont = -I * 2.0 * alpha / (cplx(1.0, -1.0) * cplx(1.5, 0.5));
    CHECK(testing::rel(set.coeffs(2, 0), spont) < 1e-14);
    CHECK(std::abs(set.gamma_r(0) - 0.5 * (std::norm(readout) + std::norm(spont))) < 1e-14);
}

TEST_CASE("free-space channels: two-atom hand substitution") {
    Eigen::VectorXd z(2);
    z << 0.0, 1.0;
    const double alpha = 0.6, dp1 = 0.4;
    const auto set = freespace_channels(testing::chain_at(z, 1.0), fs_probe(dp1, 1.0, alpha));
    const cplx d = dp1 / cplx(1.0, -1.0);
    const cplx att = d * std::exp(-d) - 1.0;
    const cplx readout = -I * std::sqrt(2.0) * alpha * d * att;
    CHECK(testing::rel(set.coeffs(0, 0), readout) < 1e-14);
    CHECK(testing::rel(set.coeffs(0, 1), readout) < 1e-14);
    CHECK(testing::rel(set.coeffs(2, 0), -I * std::sqrt(2.0 / dp1) * alpha * d * att) < 1e-14);
    CHECK(set.coeffs(1, 0) == cplx(0.0));
}

TEST_CASE("free-space channels: full blockade matches geometric sums") {
    const int n = 7;
    Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(n, 0.0, 0.06);
    const double dp1 = 0.25, alpha = 1.3;
    const auto set = freespace_channels(testing::chain_at(z, 1e6), fs_probe(dp1, 1.0, alpha));
    for (int k = 0; k < n; ++k) {
        cplx sum{0.0};
        for (int l = 0; l < n; ++l) {
            if (l == k)
                continue;
            // blockaded atoms in the prefix up to l, excluding k
            const int m = l < k ? l + 1 : l;
            sum += dp1 * geometric_attenuation(dp1, m);
        }
        CHECK(testing::rel(set.coeffs(0, k), -I * std::sqrt(2.0) * alpha * sum) < 1e-9);
    }
}

TEST_CASE("free-space readout vanishes when the downstream attenuation is zero") {
    // d e^{-d} = 1 on the branch with Im d > 0
    cplx d(0.3, 1.3);
    for (int it = 0; it < 50; ++it) {
        const cplx f = d * std::exp(-d) - 1.0;
        const cplx df = std::exp(-d) * (1.0 - d);
        d -= f / df;
    }
    REQUIRE(std::abs(d * std::exp(-d) - 1.0) < 1e-14);
    REQUIRE(d.imag() > 0.0);
    const double x = d.imag() / d.real(); // |Omega_p|^2 rho^6 / C6
    const double dp1 = d.real() * (1.0 + x * x);
    Eigen::VectorXd z(2);
    z << 0.0, std::pow(x, 1.0 / 6.0);
    const auto set = freespace_channels(testing::chain_at(z, 1.0), fs_probe(dp1, 1.0, 1.0));
    CHECK(std::abs(set.coeffs(0, 0)) < 1e-12);
    CHECK(std::abs(set.coeffs(2, 0)) < 1e-12);
    // the pair is symmetric, so the downstream atom is dark as well
    CHECK(std::abs(set.coeffs(0, 1)) < 1e-12);
}

TEST_CASE("dephasing rate examples") {
    CHECK(dephasing_rates(Eigen::MatrixXcd::Zero(0, 4)).isZero());
    Eigen::MatrixXcd one = Eigen::MatrixXcd::Zero(1, 3);
    one(0, 0) = std::sqrt(2.0);
    CHECK(dephasing_rates(one)(0) == doctest::Approx(1.0));

    Gen gen(12);
    Eigen::MatrixXcd c(6, 10);
    for (int j = 0; j < 6; ++j)
        for (int k = 0; k < 10; ++k)
            c(j, k) = gen.complex(2.0);
    const Eigen::VectorXd g = dephasing_rates(c);
    for (int k = 0; k < 10; ++k) {
        double acc = 0.0;
        for (int j = 0; j < 6; ++j)
            acc += std::norm(c(j, k));
        CHECK(std::abs(g(k) - 0.5 * acc) < 1e-13 * acc);
    }
}

TEST_CASE("coefficients are linear and rates quadratic in the probe amplitude") {
    Gen gen(21);
    const auto e = testing::ensemble_at(gen.positions(8), 0.7);
    const auto a = cavity_channels(e, cavity_probe(0.4, 3.0, 0.5));
    const auto b = cavity_channels(e, cavity_probe(0.4, 3.0, 1.0));
    CHECK((b.coeffs - 2.0 * a.coeffs).norm() < 1e-14 * b.coeffs.norm());
    CHECK((b.gamma_r - 4.0 * a.gamma_r).norm() < 1e-14 * b.gamma_r.norm());
    const auto s = a.scaled(2.0);
    CHECK((s.coeffs - b.coeffs).norm() < 1e-14 * b.coeffs.norm());
    CHECK((s.gamma_r - b.gamma_r).norm() < 1e-14 * b.gamma_r.norm());

    const auto ef = testing::chain_at(sorted_z(gen, 8), 0.7);
    const auto fa = freespace_channels(ef, fs_probe(0.3, 3.0, 0.5));
    const auto fb = freespace_channels(ef, fs_probe(0.3, 3.0, 1.0));
    CHECK((fb.gamma_r - 4.0 * fa.gamma_r).norm() < 1e-14 * fb.gamma_r.norm());
}

TEST_CASE("homogeneous cavity geometry gives equal rates") {
    Eigen::MatrixX3d tri(3, 3);
    tri << 0, 0, 0, 1, 0, 0, 0.5, std::sqrt(3.0) / 2.0, 0;
    const auto set = cavity_channels(testing::ensemble_at(tri, 1.0), cavity_probe(0.5, 1.5, 1.0));
    CHECK(set.gamma_r(0) == doctest::Approx(set.gamma_r(1)).epsilon(1e-12));
    CHECK(set.gamma_r(0) == doctest::Approx(set.gamma_r(2)).epsilon(1e-12));

    // mean rate is invariant under relabelling
    Eigen::MatrixX3d swapped = tri;
    swapped.row(0).swap(swapped.row(2));
    const auto other = cavity_channels(testing::ensemble_at(swapped, 1.0), cavity_probe(0.5, 1.5, 1.0));
    CHECK(other.gamma_r.mean() == doctest::Approx(set.gamma_r.mean()).epsilon(1e-12));
}

TEST_CASE("total jump rate equals twice the dephasing-weighted Rydberg population") {
    Gen gen(99);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = gen.integer(2, 10);
        const auto e = testing::ensemble_at(gen.positions(n), gen.log_uniform(0.1, 10.0));
        const auto set = cavity_channels(e, cavity_probe(0.3, 2.0, gen.uniform(0.1, 2.0)));
        const Eigen::VectorXcd r = gen.complex_vector(n);
        double total = 0.0;
        for (int j = 0; j < set.size(); ++j) {
            const Eigen::MatrixXcd L = set.coeffs.row(j).transpose().asDiagonal();
            total += (L * r).squaredNorm();
        }
        double expect = 0.0;
        for (int k = 0; k < n; ++k)
            expect += 2.0 * set.gamma_r(k) * std::norm(r(k));
        CHECK(std::abs(total - expect) < 1e-10 * expect);
    }
}

TEST_CASE("free-space channels need sorted atoms") {
    Eigen::VectorXd z(3);
    z << 0.0, 2.0, 1.0;
    CHECK_THROWS_AS(freespace_channels(testing::chain_at(z, 1.0), fs_probe(0.1, 1.0, 1.0)),
                    OrderingError);
}

} // TEST_SUITE
