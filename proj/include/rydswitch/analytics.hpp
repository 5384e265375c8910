#pragma once

#include "rydswitch/types.hpp"

#include <Eigen/Dense>

namespace rydswitch::analytics {

// delta = |Omega_c|^2 / Delta
double two_photon_detuning(double omega_c, double delta_big);

// cavity: C_c gamma |Omega_c|^2 / Delta^2, free space: d_c gamma |Omega_c|^2 / (2 Delta^2)
double gamma_out(Variant variant, double coop_or_depth, double gamma_ec, double omega_c,
                 double delta_big);

// Cavity values that keep the collective linewidth (1 + C_c) gamma in the
// denominator; they reduce to the expressions above for Delta >> C_c gamma.
double dressed_two_photon_detuning(double C_c, double gamma_ec, double omega_c, double delta_big);
double dressed_gamma_out(double C_c, double gamma_ec, double omega_c, double delta_big);

// (2 C_c / (1 + 2 C_c))^2
double storage_prob_cavity(double C_c);

// The free-space storage probability admits two groupings of its exponent:
//   nested:  2d (d (-g^2 d / D^2 - 2) - 4) / (d + 2)^2
//   grouped: (2d (-g^2 d^2 / D^2 - 2) - 4) / (d + 2)^2
// with prefactor d / (2 + d) in both.
enum class FsFormula { nested, grouped };

const char* to_string(FsFormula f);

double storage_prob_fs(double d_c, double gamma_ec, double delta_big, FsFormula variant);

// Mean of `rates` with nonnegative `weights` (flat mean if all weights vanish).
double weighted_mean(const Eigen::VectorXd& rates, const Eigen::VectorXd& weights);

// |alpha_in,p|^2 that makes the mean dephasing equal gamma_out, given the
// mean dephasing at |alpha_in,p|^2 = 1 (dephasing is quadratic in alpha).
double matched_probe_intensity(double gamma_out_target, double gamma_r_bar_at_unit);

// Relative impedance-matching mismatch (gamma_r - gamma_out) / gamma_out.
double im_residual(double gamma_r_bar, double gamma_out);

} // namespace rydswitch::analytics
