#pragma once

#include "rydswitch/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>

namespace rydswitch::ensemble {

enum class GeometryKind { gaussian3d, gaussian1d };

const char* to_string(GeometryKind kind);

// Random cloud description. Lengths are in units of the Gaussian width, so
// the only physical length scale left is fixed by the van der Waals
// coefficient (see `c6_from_blockade_ratio`).
struct EnsembleGeometry {
    GeometryKind kind = GeometryKind::gaussian3d;
    int n_atoms = 1;
    double sigma = 1.0;  // isotropic width (3D) or sigma_z (1D)
    double length = 4.0; // medium length L, 1D only; cloud centred at L/2
    std::uint64_t seed = 0;
    double rho_min = 0.0; // optional exclusion distance, 0 disables

    void validate() const;
};

struct AtomEnsemble {
    GeometryKind kind = GeometryKind::gaussian3d;
    Eigen::MatrixX3d positions; // one row per atom (x, y, z)
    Eigen::MatrixXd vdw;        // V_kl = c6 / rho_kl^6, zero diagonal
    double c6 = 0.0;

    int size() const { return static_cast<int>(positions.rows()); }
    double distance(int k, int l) const;
    // True when z coordinates are nondecreasing (propagation order).
    bool sorted_along_z() const;
};

struct ProbeParams {
    double g_p = 1.0;
    double omega_p = 1.0;
    std::optional<double> kappa_p; // cavity variant
    double gamma_ep = 1.0;
    std::optional<double> d_p1; // free-space variant, single-atom depth
    double alpha_in_p = 0.0;    // |alpha|^2 = photons per unit time

    void validate(Variant variant) const;
    // |g_p|^2 / (kappa_p gamma_ep)
    double single_atom_cooperativity() const;
};

// Positions only; `vdw` is left empty and `c6` zero.
AtomEnsemble sample_positions(const EnsembleGeometry& geom);

Eigen::MatrixXd pairwise_vdw(const Eigen::MatrixX3d& positions, double c6);

// Sample, then fill the interaction matrix.
AtomEnsemble make_ensemble(const EnsembleGeometry& geom, double c6);

// Rescale interactions in place (positions unchanged).
void set_c6(AtomEnsemble& ens, double c6);

// c6 such that |Omega_p|^2 sigma^6 / c6 equals `ratio`.
double c6_from_blockade_ratio(double omega_p, double sigma, double ratio);

struct BlockadedCooperativity {
    cplx total;             // C_b,p^k
    Eigen::VectorXcd pairs; // C_b1,p^{k,l}, entry k is zero
};

BlockadedCooperativity blockaded_cooperativity(const AtomEnsemble& ens,
                                               const ProbeParams& probe, int k);

// C_b,p^k for every k.
Eigen::VectorXcd blockaded_cooperativities(const AtomEnsemble& ens,
                                           const ProbeParams& probe);

struct BlockadedDepth {
    Eigen::VectorXcd single;      // d_b1,p^{k,l} over l, entry k is zero
    Eigen::VectorXcd attenuation; // D_b,p^{k,l} over l
};

BlockadedDepth blockaded_optical_depth(const AtomEnsemble& ens,
                                       const ProbeParams& probe, int k);

// d_b,p^k = sum over l != k of d_b1,p^{k,l}, for every k.
Eigen::VectorXcd blockaded_depths(const AtomEnsemble& ens, const ProbeParams& probe);

// D_l = sum_{l'<=l} d_l' exp(-sum_{l''=l'..l} d_l'') - 1 for every prefix l,
// evaluated with the O(N) recurrence S_l = (S_{l-1} + d_l) exp(-d_l).
Eigen::VectorXcd attenuation_from_depths(const Eigen::VectorXcd& depths);

void write_csv(std::ostream& os, const AtomEnsemble& ens);
AtomEnsemble read_csv(std::istream& is, GeometryKind kind, double c6);

} // namespace rydswitch::ensemble
