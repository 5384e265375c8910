#include "rydswitch/channels.hpp"
#include "rydswitch/errors.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

namespace rydswitch::channels {

namespace {

constexpr double singular_tolerance = 1e-12;

std::string fmt_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

JumpChannelSet with_layout(int n) {
    JumpChannelSet set;
    set.coeffs = Eigen::MatrixXcd::Zero(n + 1, n);
    set.kinds.assign(static_cast<std::size_t>(n + 1), ChannelKind::spontaneous);
    set.atoms.resize(static_cast<std::size_t>(n + 1));
    set.kinds[0] = ChannelKind::readout;
    set.atoms[0] = -1;
    for (int l = 0; l < n; ++l)
        set.atoms[static_cast<std::size_t>(l + 1)] = l;
    return set;
}

} // namespace

const char* to_string(ChannelKind kind) {
    return kind == ChannelKind::readout ? "readout" : "spontaneous";
}

JumpChannelSet JumpChannelSet::scaled(cplx factor) const {
    JumpChannelSet out = *this;
    out.coeffs *= factor;
    out.gamma_r *= std::norm(factor);
    return out;
}

JumpChannelSet JumpChannelSet::none(int n_atoms) {
    JumpChannelSet set;
    set.coeffs = Eigen::MatrixXcd::Zero(0, n_atoms);
    set.gamma_r = Eigen::VectorXd::Zero(n_atoms);
    return set;
}

Eigen::VectorXd dephasing_rates(const Eigen::MatrixXcd& coeffs) {
    if (coeffs.rows() == 0)
        return Eigen::VectorXd::Zero(coeffs.cols());
    return 0.5 * coeffs.cwiseAbs2().colwise().sum().transpose();
}

JumpChannelSet cavity_channels(const ensemble::AtomEnsemble& ens,
                               const ensemble::ProbeParams& probe) {
    probe.validate(Variant::cavity);
    const int n = ens.size();
    const double kappa = *probe.kappa_p;
    const double gamma = probe.gamma_ep;
    const double alpha = probe.alpha_in_p;
    const double omega2 = probe.omega_p * probe.omega_p;
    JumpChannelSet set = with_layout(n);

    const cplx spont_prefactor = -std::sqrt(gamma / kappa) * I * 2.0 * probe.g_p * alpha;
    for (int k = 0; k < n; ++k) {
        const cplx cb = ensemble::blockaded_cooperativity(ens, probe, k).total;
        const cplx denom = 1.0 + cb;
        if (std::abs(denom) < singular_tolerance)
            throw SingularChannelError("cavity_channels: 1 + C_b,p vanishes for atom " +
                                       std::to_string(k));
        set.coeffs(0, k) = -2.0 * cb * alpha / denom;
        for (int l = 0; l < n; ++l) {
            if (l == k || ens.vdw(k, l) == 0.0)
                continue;
            const cplx blockade = cplx(gamma, -omega2 / ens.vdw(k, l));
            set.coeffs(l + 1, k) = spont_prefactor / (blockade * denom);
        }
    }
    set.gamma_r = dephasing_rates(set.coeffs);
    return set;
}

JumpChannelSet freespace_channels(const ensemble::AtomEnsemble& ens,
                                  const ensemble::ProbeParams& probe) {
    probe.validate(Variant::freespace);
    if (!ens.sorted_along_z())
        throw OrderingError("freespace_channels: atoms must be sorted along z");
    const int n = ens.size();
    const double gamma = probe.gamma_ep;
    const double alpha = probe.alpha_in_p;
    const double dp1 = *probe.d_p1;
    JumpChannelSet set = with_layout(n);

    const cplx readout_prefactor = -I * std::sqrt(2.0 * gamma) * alpha;
    const cplx spont_prefactor =
        dp1 > 0.0 ? -I * std::sqrt(2.0 * gamma / dp1) * alpha : cplx{0.0};
    for (int k = 0; k < n; ++k) {
        const ensemble::BlockadedDepth depth = ensemble::blockaded_optical_depth(ens, probe, k);
        cplx readout{0.0};
        for (int l = 0; l < n; ++l) {
            if (l == k)
                continue;
            const cplx term = depth.single(l) * depth.attenuation(l);
            readout += term;
            set.coeffs(l + 1, k) = spont_prefactor * term;
        }
        set.coeffs(0, k) = readout_prefactor * readout;
    }
    set.gamma_r = dephasing_rates(set.coeffs);
    return set;
}

JumpChannelSet build_channels(Variant variant, const ensemble::AtomEnsemble& ens,
                              const ensemble::ProbeParams& probe) {
    return variant == Variant::cavity ? cavity_channels(ens, probe)
                                      : freespace_channels(ens, probe);
}

void write_csv(std::ostream& os, const JumpChannelSet& set) {
    os << "channel_kind,l,k,re,im,gamma_r_k\n";
    for (int j = 0; j < set.size(); ++j) {
        for (int k = 0; k < set.n_atoms(); ++k) {
            const cplx c = set.coeffs(j, k);
            os << to_string(set.kinds[static_cast<std::size_t>(j)]) << ','
               << set.atoms[static_cast<std::size_t>(j)] << ',' << k << ','
               << fmt_double(c.real()) << ',' << fmt_double(c.imag()) << ','
               << fmt_double(set.gamma_r(k)) << '\n';
        }
    }
}

} // namespace rydswitch::channels
