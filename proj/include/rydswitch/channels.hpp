#pragma once

#include "rydswitch/ensemble.hpp"
#include "rydswitch/types.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace rydswitch::channels {

enum class ChannelKind { readout, spontaneous };

const char* to_string(ChannelKind kind);

// Probe-induced jump operators L_j = sum_k c_{j,k} |r_k><r_k| acting on the
// stored control excitation. Row j of `coeffs` holds c_{j,k}; the readout
// channel, when present, is row 0 and spontaneous channel l follows it.
struct JumpChannelSet {
    Eigen::MatrixXcd coeffs;
    std::vector<ChannelKind> kinds;
    std::vector<int> atoms; // emitting atom l for spontaneous rows, -1 otherwise
    Eigen::VectorXd gamma_r; // per-atom amplitude dephasing rate

    int n_atoms() const { return static_cast<int>(coeffs.cols()); }
    int size() const { return static_cast<int>(coeffs.rows()); }
    bool empty() const { return coeffs.rows() == 0; }

    // Channel set for the same geometry with every coefficient multiplied by
    // `factor` (gamma_r scales with |factor|^2).
    JumpChannelSet scaled(cplx factor) const;

    static JumpChannelSet none(int n_atoms);
};

JumpChannelSet cavity_channels(const ensemble::AtomEnsemble& ens,
                               const ensemble::ProbeParams& probe);

JumpChannelSet freespace_channels(const ensemble::AtomEnsemble& ens,
                                  const ensemble::ProbeParams& probe);

JumpChannelSet build_channels(Variant variant, const ensemble::AtomEnsemble& ens,
                              const ensemble::ProbeParams& probe);

// gamma_r[k] = 1/2 sum_j |c_{j,k}|^2
Eigen::VectorXd dephasing_rates(const Eigen::MatrixXcd& coeffs);

// Debug dump: channel_kind,l,k,re,im,gamma_r_k
void write_csv(std::ostream& os, const JumpChannelSet& set);

} // namespace rydswitch::channels
