#include "rydswitch/propagator.hpp"
#include "rydswitch/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>

namespace rydswitch::propagator {

namespace {

// binary powering
Eigen::MatrixXcd power(const Eigen::MatrixXcd& m, int p) {
    Eigen::MatrixXcd base = m;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    for (; p > 0; p >>= 1) {
        if (p & 1)
            out = (out * base).eval();
        if (p > 1)
            base = (base * base).eval();
    }
    return out;
}

} // namespace

GridPropagator::GridPropagator(const dynamics::Generator& g, double step, int coarse_factor)
    : step_(step), coarse_factor_(coarse_factor), pulse_(g.pulse),
      drive_off_(g.pulse.drive_off()) {
    if (!(step > 0.0) || coarse_factor < 1)
        throw ConfigError("GridPropagator: step must be positive");
    const int n = g.dim();
    // [[M, b, 0, 0, 0], [0, J]] with J the 4x4 shift; the top-right block of
    // its exponential holds int_0^h exp(M(h-s)) b s^k / k! ds, k = 0..3
    Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(n + 4, n + 4);
    aug.topLeftCorner(n, n) = g.matrix;
    aug.block(0, n, n, 1) = g.drive;
    for (int k = 0; k < 3; ++k)
        aug(n + k, n + k + 1) = 1.0;
    aug *= step;
    Eigen::MatrixXcd e = aug.exp();
    if (!e.allFinite())
        throw NumericalError("GridPropagator: matrix exponential is not finite");
    fine_ = e.topLeftCorner(n, n);
    drive_.resize(n, 4);
    double fact = 1.0;
    for (int k = 0; k < 4; ++k) {
        if (k > 0)
            fact *= k;
        drive_.col(k) = fact * e.block(0, n + k, n, 1);
    }
    if (coarse_factor > 1) {
        coarse_ = power(fine_, coarse_factor);
        super_ = power(coarse_, coarse_factor);
    } else {
        coarse_ = super_ = fine_;
    }
}

void GridPropagator::free_step(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const {
    out.noalias() = fine_ * psi;
}

void GridPropagator::coarse(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const {
    out.noalias() = coarse_ * psi;
}

void GridPropagator::super(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const {
    out.noalias() = super_ * psi;
}

void GridPropagator::driven_step(const Eigen::VectorXcd& psi, double t, double weight,
                                 Eigen::VectorXcd& out) const {
    out.noalias() = fine_ * psi;
    if (weight == 0.0 || t >= drive_off_)
        return;
    const double h = step_;
    std::array<double, 4> f{};
    for (int j = 0; j < 4; ++j)
        f[j] = t + j * h / 3.0 < drive_off_ ? weight * pulse_.amplitude(t + j * h / 3.0) : 0.0;
    // Newton forward differences on u = 3 s / h
    const double d1 = f[1] - f[0];
    const double d2 = f[2] - 2.0 * f[1] + f[0];
    const double d3 = f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0];
    const double r = 3.0 / h;
    const std::array<double, 4> a{f[0], (d1 - 0.5 * d2 + d3 / 3.0) * r,
                                  (0.5 * d2 - 0.5 * d3) * r * r, (d3 / 6.0) * r * r * r};
    for (int k = 0; k < 4; ++k)
        out += a[k] * drive_.col(k);
}

double pulse_grid_step(const dynamics::GaussianPulse& pulse, int per_tau, int& n_pulse_end) {
    if (per_tau < 1)
        throw ConfigError("pulse_grid_step: per_tau must be positive");
    const double t_pe = pulse.end();
    n_pulse_end = static_cast<int>(std::ceil(t_pe / (pulse.tau / per_tau)));
    return t_pe / n_pulse_end;
}

std::vector<double> simpson_weights(int n, double h) {
    if (n < 1)
        throw ConfigError("simpson_weights: need at least one panel");
    std::vector<double> w(static_cast<std::size_t>(n + 1), 0.0);
    if (n == 1) {
        w[0] = w[1] = 0.5 * h;
        return w;
    }
    const int m = n % 2 == 0 ? n : n - 3; // Simpson part
    for (int i = 0; i + 2 <= m; i += 2) {
        w[static_cast<std::size_t>(i)] += h / 3.0;
        w[static_cast<std::size_t>(i + 1)] += 4.0 * h / 3.0;
        w[static_cast<std::size_t>(i + 2)] += h / 3.0;
    }
    if (m != n) {
        const double c = 3.0 * h / 8.0;
        w[static_cast<std::size_t>(m)] += c;
        w[static_cast<std::size_t>(m + 1)] += 3.0 * c;
        w[static_cast<std::size_t>(m + 2)] += 3.0 * c;
        w[static_cast<std::size_t>(m + 3)] += c;
    }
    return w;
}

GridStorage storage_from_nodes(const dynamics::Generator& g,
                               const std::vector<Eigen::VectorXcd>& nodes, double h,
                               int n_pulse_end) {
    if (n_pulse_end < 1 || static_cast<int>(nodes.size()) <= n_pulse_end)
        throw ConfigError("storage_from_nodes: not enough nodes");
    const int n = g.layout.n_atoms;
    const int ro = g.layout.r_offset();
    const auto w = simpson_weights(n_pulse_end, h);
    GridStorage out;
    out.rydberg_weights = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n_pulse_end; ++i)
        out.rydberg_weights +=
            w[static_cast<std::size_t>(i)] *
            nodes[static_cast<std::size_t>(i)].segment(ro, n).cwiseAbs2();
    const Eigen::VectorXcd& last = nodes[static_cast<std::size_t>(n_pulse_end)];
    out.rydberg_at_pulse_end = last.segment(ro, n).squaredNorm();
    out.storage_probability =
        2.0 * g.gamma_r.dot(out.rydberg_weights) + out.rydberg_at_pulse_end;
    return out;
}

GridStorage grid_storage(const dynamics::Generator& g, int per_tau) {
    int n_pe = 0;
    const double h = pulse_grid_step(g.pulse, per_tau, n_pe);
    const GridPropagator prop(g, h, 1);
    std::vector<Eigen::VectorXcd> nodes(static_cast<std::size_t>(n_pe + 1));
    nodes[0] = Eigen::VectorXcd::Zero(g.dim());
    for (int i = 0; i < n_pe; ++i)
        prop.driven_step(nodes[static_cast<std::size_t>(i)], i * h, 1.0,
                         nodes[static_cast<std::size_t>(i + 1)]);
    return storage_from_nodes(g, nodes, h, n_pe);
}

} // namespace rydswitch::propagator
