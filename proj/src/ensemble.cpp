#include "rydswitch/ensemble.hpp"
#include "rydswitch/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace rydswitch::ensemble {

namespace {

constexpr int max_collision_retries = 100;
constexpr int max_truncation_retries = 10000;

std::string fmt_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace

const char* to_string(GeometryKind kind) {
    return kind == GeometryKind::gaussian3d ? "gaussian3d" : "gaussian1d";
}

void EnsembleGeometry::validate() const {
    if (n_atoms < 1)
        throw ConfigError("ensemble: n_atoms must be >= 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ConfigError("ensemble: sigma must be positive");
    if (kind == GeometryKind::gaussian1d && (!(length > 0.0) || !std::isfinite(length)))
        throw ConfigError("ensemble: 1D medium length must be positive");
    if (rho_min < 0.0)
        throw ConfigError("ensemble: rho_min must be nonnegative");
}

double AtomEnsemble::distance(int k, int l) const {
    return (positions.row(k) - positions.row(l)).norm();
}

bool AtomEnsemble::sorted_along_z() const {
    for (Eigen::Index i = 1; i < positions.rows(); ++i)
        if (positions(i, 2) < positions(i - 1, 2))
            return false;
    return true;
}

void ProbeParams::validate(Variant variant) const {
    if (!(gamma_ep > 0.0))
        throw ConfigError("probe: gamma_ep must be positive");
    if (variant == Variant::cavity) {
        if (!kappa_p || !(*kappa_p > 0.0))
            throw ConfigError("probe: cavity variant needs kappa_p > 0");
    } else {
        if (!d_p1 || !(*d_p1 >= 0.0))
            throw ConfigError("probe: free-space variant needs d_p1 >= 0");
    }
}

double ProbeParams::single_atom_cooperativity() const {
    if (!kappa_p)
        throw ConfigError("probe: kappa_p not set");
    return g_p * g_p / (*kappa_p * gamma_ep);
}

AtomEnsemble sample_positions(const EnsembleGeometry& geom) {
    geom.validate();
    std::mt19937_64 rng(geom.seed);
    std::normal_distribution<double> normal(0.0, geom.sigma);

    const int n = geom.n_atoms;
    AtomEnsemble ens;
    ens.kind = geom.kind;
    ens.positions = Eigen::MatrixX3d::Zero(n, 3);

    auto draw = [&](int i) {
        if (geom.kind == GeometryKind::gaussian3d) {
            for (int c = 0; c < 3; ++c)
                ens.positions(i, c) = normal(rng);
            return;
        }
        // truncated Gaussian on [0, L] centred at L/2, by rejection
        for (int attempt = 0; attempt < max_truncation_retries; ++attempt) {
            double z = 0.5 * geom.length + normal(rng);
            if (z >= 0.0 && z <= geom.length) {
                ens.positions(i, 2) = z;
                return;
            }
        }
        throw ConfigError("ensemble: truncated 1D Gaussian rejects every sample; "
                          "sigma is too large for the medium length");
    };

    auto collides = [&](int i) {
        for (int j = 0; j < i; ++j) {
            double rho = (ens.positions.row(i) - ens.positions.row(j)).norm();
            if (rho <= 0.0 || rho < geom.rho_min)
                return true;
        }
        return false;
    };

    for (int i = 0; i < n; ++i) {
        draw(i);
        int retries = 0;
        while (collides(i)) {
            if (++retries > max_collision_retries)
                throw DegenerateGeometryError("ensemble: could not place atom " +
                                              std::to_string(i) +
                                              " without collision after 100 retries");
            draw(i);
        }
    }

    if (geom.kind == GeometryKind::gaussian1d) {
        std::vector<double> z(ens.positions.col(2).data(), ens.positions.col(2).data() + n);
        std::sort(z.begin(), z.end());
        for (int i = 0; i < n; ++i)
            ens.positions(i, 2) = z[static_cast<std::size_t>(i)];
    }
    return ens;
}

Eigen::MatrixXd pairwise_vdw(const Eigen::MatrixX3d& positions, double c6) {
    const Eigen::Index n = positions.rows();
    Eigen::MatrixXd vdw = Eigen::MatrixXd::Zero(n, n);
    if (c6 == 0.0)
        return vdw;
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = k + 1; l < n; ++l) {
            double rho2 = (positions.row(k) - positions.row(l)).squaredNorm();
            if (!(rho2 > 0.0))
                throw DegenerateGeometryError("pairwise_vdw: coincident atoms " +
                                              std::to_string(k) + " and " + std::to_string(l));
            double v = c6 / (rho2 * rho2 * rho2);
            vdw(k, l) = v;
            vdw(l, k) = v;
        }
    }
    return vdw;
}

AtomEnsemble make_ensemble(const EnsembleGeometry& geom, double c6) {
    AtomEnsemble ens = sample_positions(geom);
    set_c6(ens, c6);
    return ens;
}

void set_c6(AtomEnsemble& ens, double c6) {
    ens.c6 = c6;
    ens.vdw = pairwise_vdw(ens.positions, c6);
}

double c6_from_blockade_ratio(double omega_p, double sigma, double ratio) {
    if (!(ratio > 0.0))
        throw ConfigError("blockade ratio must be positive");
    return omega_p * omega_p * std::pow(sigma, 6) / ratio;
}

namespace {

// |Omega_p|^2 / V_kl, or +inf when the pair does not interact
double blockade_detuning(const AtomEnsemble& ens, const ProbeParams& probe, int k, int l) {
    double v = ens.vdw(k, l);
    if (v == 0.0)
        return std::numeric_limits<double>::infinity();
    return probe.omega_p * probe.omega_p / v;
}

void check_index(const AtomEnsemble& ens, int k) {
    if (k < 0 || k >= ens.size())
        throw ConfigError("atom index out of range");
    if (ens.vdw.rows() != ens.size())
        throw ConfigError("ensemble has no interaction matrix");
}

} // namespace

BlockadedCooperativity blockaded_cooperativity(const AtomEnsemble& ens,
                                               const ProbeParams& probe, int k) {
    check_index(ens, k);
    if (!probe.kappa_p)
        throw ConfigError("blockaded_cooperativity: cavity probe parameters required");
    const int n = ens.size();
    const double strength = probe.g_p * probe.g_p / *probe.kappa_p;
    BlockadedCooperativity out{cplx{0.0}, Eigen::VectorXcd::Zero(n)};
    for (int l = 0; l < n; ++l) {
        if (l == k)
            continue;
        double x = blockade_detuning(ens, probe, k, l);
        if (std::isinf(x))
            continue;
        out.pairs(l) = strength / cplx(probe.gamma_ep, -x);
    }
    out.total = out.pairs.sum();
    return out;
}

Eigen::VectorXcd blockaded_cooperativities(const AtomEnsemble& ens,
                                           const ProbeParams& probe) {
    Eigen::VectorXcd c(ens.size());
    for (int k = 0; k < ens.size(); ++k)
        c(k) = blockaded_cooperativity(ens, probe, k).total;
    return c;
}

Eigen::VectorXcd attenuation_from_depths(const Eigen::VectorXcd& depths) {
    Eigen::VectorXcd out(depths.size());
    cplx s{0.0};
    for (Eigen::Index l = 0; l < depths.size(); ++l) {
        s = (s + depths(l)) * std::exp(-depths(l));
        out(l) = s - 1.0;
    }
    return out;
}

BlockadedDepth blockaded_optical_depth(const AtomEnsemble& ens, const ProbeParams& probe,
                                       int k) {
    check_index(ens, k);
    if (!probe.d_p1)
        throw ConfigError("blockaded_optical_depth: free-space probe parameters required");
    if (!ens.sorted_along_z())
        throw OrderingError("blockaded_optical_depth: atoms must be sorted along z");
    const int n = ens.size();
    BlockadedDepth out{Eigen::VectorXcd::Zero(n), Eigen::VectorXcd()};
    for (int l = 0; l < n; ++l) {
        if (l == k)
            continue;
        double x = blockade_detuning(ens, probe, k, l);
        if (std::isinf(x))
            continue;
        out.single(l) = *probe.d_p1 * probe.gamma_ep / cplx(probe.gamma_ep, -x);
    }
    out.attenuation = attenuation_from_depths(out.single);
    return out;
}

Eigen::VectorXcd blockaded_depths(const AtomEnsemble& ens, const ProbeParams& probe) {
    Eigen::VectorXcd d(ens.size());
    for (int k = 0; k < ens.size(); ++k)
        d(k) = blockaded_optical_depth(ens, probe, k).single.sum();
    return d;
}

void write_csv(std::ostream& os, const AtomEnsemble& ens) {
    os << "atom_index,x,y,z\n";
    for (int i = 0; i < ens.size(); ++i) {
        os << i << ',' << fmt_double(ens.positions(i, 0)) << ','
           << fmt_double(ens.positions(i, 1)) << ',' << fmt_double(ens.positions(i, 2))
           << '\n';
    }
}

AtomEnsemble read_csv(std::istream& is, GeometryKind kind, double c6) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("atom_index,x,y,z", 0) != 0)
        throw ConfigError("ensemble csv: missing header 'atom_index,x,y,z'");
    std::vector<std::array<double, 3>> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string cell;
        std::array<double, 4> vals{};
        for (int c = 0; c < 4; ++c) {
            if (!std::getline(ss, cell, ','))
                throw ConfigError("ensemble csv: short row '" + line + "'");
            auto res = std::from_chars(cell.data(), cell.data() + cell.size(), vals[c]);
            if (res.ec != std::errc())
                throw ConfigError("ensemble csv: bad number '" + cell + "'");
        }
        if (static_cast<std::size_t>(vals[0]) != rows.size())
            throw ConfigError("ensemble csv: atom_index out of sequence");
        rows.push_back({vals[1], vals[2], vals[3]});
    }
    AtomEnsemble ens;
    ens.kind = kind;
    ens.positions.resize(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < 3; ++c)
            ens.positions(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    set_c6(ens, c6);
    return ens;
}

} // namespace rydswitch::ensemble
