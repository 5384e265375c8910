#pragma once

#include "rydswitch/channels.hpp"
#include "rydswitch/dynamics.hpp"
#include "rydswitch/trajectories.hpp"

#include <vector>

namespace rydswitch::oracle {

inline constexpr int max_oracle_atoms = 4;

struct OracleSample {
    double t = 0.0;
    trajectories::Populations populations;
    double readout = 0.0; // expected number of readout jumps in [0, t]
    double trace = 0.0;   // total trace, stays 1
    double occupied = 0.0; // trace outside the vacuum
};

// Dense Lindblad integration on {vacuum, incoming pulse, single-excitation
// system}. The pulse is fed from a virtual source mode whose coupling
// f(t)/sqrt(remaining(t)) reproduces the drive exactly; every jump channel of
// the trajectory engine appears as a Lindblad operator.
std::vector<OracleSample> master_equation_oracle(const dynamics::Generator& g,
                                                 const channels::JumpChannelSet& ch,
                                                 const std::vector<double>& times,
                                                 const dynamics::IntegratorOptions& opt = {1e-10,
                                                                                          1e-13});

} // namespace rydswitch::oracle
