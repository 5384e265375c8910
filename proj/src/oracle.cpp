#include "rydswitch/oracle.hpp"
#include "rydswitch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rydswitch::oracle {

std::vector<OracleSample> master_equation_oracle(const dynamics::Generator& g,
                                                 const channels::JumpChannelSet& ch,
                                                 const std::vector<double>& times,
                                                 const dynamics::IntegratorOptions& opt) {
    const int n = g.layout.n_atoms;
    if (n > max_oracle_atoms)
        throw ConfigError("master_equation_oracle: at most " + std::to_string(max_oracle_atoms) +
                          " atoms");
    if (ch.n_atoms() != n)
        throw ConfigError("master_equation_oracle: channel set does not match the generator");
    if (!std::is_sorted(times.begin(), times.end()))
        throw ConfigError("master_equation_oracle: sample times must be sorted");

    const int d = g.dim();
    const int dm = d + 2; // vacuum, source, system
    const int sys = 2;
    const int eo = sys + g.layout.e_offset();
    const int ro = sys + g.layout.r_offset();
    const double t_off = g.pulse.drive_off();
    const double gamma_e2 = 2.0 * g.gamma_e;

    auto source_coupling = [&](double t) {
        if (t >= t_off)
            return 0.0;
        const double rem = g.pulse.remaining(t);
        return rem > 0.0 ? g.pulse.amplitude(t) / std::sqrt(rem) : 0.0;
    };

    std::vector<int> readout_rows;
    for (int j = 0; j < ch.size(); ++j)
        if (ch.kinds[static_cast<std::size_t>(j)] == channels::ChannelKind::readout)
            readout_rows.push_back(j);

    Eigen::MatrixXcd mx = Eigen::MatrixXcd::Zero(dm, dm);
    Eigen::RowVectorXcd out_row = Eigen::RowVectorXcd::Zero(dm);
    auto rhs = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        const double gu = source_coupling(t);
        mx.setZero();
        mx(1, 1) = -0.5 * gu * gu;
        mx.block(sys, 1, d, 1) = g.drive * gu;
        mx.block(sys, sys, d, d) = g.matrix;
        out_row.setZero();
        out_row(1) = g.output_sign * gu;
        out_row.segment(sys, d) = g.output.transpose();

        Eigen::Map<const Eigen::MatrixXcd> rho(y.data(), dm, dm);
        dy.resize(y.size());
        Eigen::Map<Eigen::MatrixXcd> drho(dy.data(), dm, dm);
        drho.noalias() = mx * rho;
        drho.noalias() += rho * mx.adjoint();
        // emission into the output field and atomic decay end in vacuum
        cplx to_vac = (out_row * rho * out_row.adjoint())(0, 0);
        for (int l = 0; l < n; ++l)
            to_vac += gamma_e2 * rho(eo + l, eo + l);
        drho(0, 0) += to_vac;
        for (int j = 0; j < ch.size(); ++j)
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m)
                    drho(ro + k, ro + m) +=
                        ch.coeffs(j, k) * rho(ro + k, ro + m) * std::conj(ch.coeffs(j, m));
        cplx readout{0.0};
        for (int j : readout_rows)
            for (int k = 0; k < n; ++k)
                readout += std::norm(ch.coeffs(j, k)) * rho(ro + k, ro + k);
        dy(dm * dm) = readout;
    };

    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dm * dm + 1);
    y(1 * dm + 1) = 1.0; // rho = |source><source|

    dynamics::IntegratorOptions iopt = opt;
    iopt.max_step = std::min(opt.max_step, dynamics::default_integrator_options(g).max_step);

    std::vector<OracleSample> out;
    out.reserve(times.size());
    double t = 0.0;
    double step = 0.0;
    for (double ts : times) {
        if (ts < 0.0)
            throw ConfigError("master_equation_oracle: negative sample time");
        if (t < t_off && ts > t_off) {
            dynamics::integrate_adaptive(rhs, t, t_off, y, iopt, step);
            t = t_off;
        }
        dynamics::integrate_adaptive(rhs, t, ts, y, iopt, step);
        t = std::max(t, ts);

        Eigen::Map<const Eigen::MatrixXcd> rho(y.data(), dm, dm);
        OracleSample s;
        s.t = ts;
        s.populations.vacuum = rho(0, 0).real();
        s.populations.source = rho(1, 1).real();
        if (g.layout.has_cavity())
            s.populations.cavity = rho(sys, sys).real();
        for (int l = 0; l < n; ++l) {
            s.populations.excited += rho(eo + l, eo + l).real();
            s.populations.rydberg += rho(ro + l, ro + l).real();
        }
        s.trace = rho.trace().real();
        s.occupied = s.trace - s.populations.vacuum;
        s.readout = y(dm * dm).real();
        out.push_back(s);
    }
    return out;
}

} // namespace rydswitch::oracle
