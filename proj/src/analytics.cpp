#include "rydswitch/analytics.hpp"
#include "rydswitch/errors.hpp"

#include <cmath>

namespace rydswitch::analytics {

namespace {

void require_detuned(double delta_big, const char* what) {
    if (delta_big == 0.0 || !std::isfinite(delta_big))
        throw DomainError(std::string(what) + ": one-photon detuning must be nonzero");
}

} // namespace

double two_photon_detuning(double omega_c, double delta_big) {
    require_detuned(delta_big, "two_photon_detuning");
    return omega_c * omega_c / delta_big;
}

double gamma_out(Variant variant, double coop_or_depth, double gamma_ec, double omega_c,
                 double delta_big) {
    require_detuned(delta_big, "gamma_out");
    const double base = coop_or_depth * gamma_ec * omega_c * omega_c / (delta_big * delta_big);
    return variant == Variant::cavity ? base : 0.5 * base;
}

double dressed_two_photon_detuning(double C_c, double gamma_ec, double omega_c,
                                   double delta_big) {
    const double width = (1.0 + C_c) * gamma_ec;
    const double denom = delta_big * delta_big + width * width;
    if (!(denom > 0.0))
        throw DomainError("dressed_two_photon_detuning: vanishing linewidth");
    return omega_c * omega_c * delta_big / denom;
}

double dressed_gamma_out(double C_c, double gamma_ec, double omega_c, double delta_big) {
    const double width = (1.0 + C_c) * gamma_ec;
    const double denom = delta_big * delta_big + width * width;
    if (!(denom > 0.0))
        throw DomainError("dressed_gamma_out: vanishing linewidth");
    return omega_c * omega_c * C_c * gamma_ec / denom;
}

double storage_prob_cavity(double C_c) {
    if (!(C_c >= 0.0))
        throw DomainError("storage_prob_cavity: C_c must be nonnegative");
    const double x = 2.0 * C_c / (1.0 + 2.0 * C_c);
    return x * x;
}

const char* to_string(FsFormula f) {
    return f == FsFormula::nested ? "nested" : "grouped";
}

double storage_prob_fs(double d_c, double gamma_ec, double delta_big, FsFormula variant) {
    require_detuned(delta_big, "storage_prob_fs");
    if (!(d_c >= 0.0))
        throw DomainError("storage_prob_fs: d_c must be nonnegative");
    const double g2 = gamma_ec * gamma_ec / (delta_big * delta_big);
    const double denom = (d_c + 2.0) * (d_c + 2.0);
    double exponent;
    if (variant == FsFormula::nested)
        exponent = 2.0 * d_c * (d_c * (-g2 * d_c - 2.0) - 4.0) / denom;
    else
        exponent = (2.0 * d_c * (-g2 * d_c * d_c - 2.0) - 4.0) / denom;
    return d_c / (2.0 + d_c) * std::exp(exponent);
}

double weighted_mean(const Eigen::VectorXd& rates, const Eigen::VectorXd& weights) {
    if (rates.size() == 0)
        throw DomainError("weighted_mean: empty input");
    if (weights.size() != rates.size())
        throw DomainError("weighted_mean: size mismatch");
    if ((weights.array() < 0.0).any())
        throw DomainError("weighted_mean: negative weight");
    const double total = weights.sum();
    if (!(total > 0.0))
        return rates.mean();
    return rates.dot(weights) / total;
}

double matched_probe_intensity(double gamma_out_target, double gamma_r_bar_at_unit) {
    if (!(gamma_out_target > 0.0))
        throw DomainError("matched_probe_intensity: gamma_out must be positive");
    if (!(gamma_r_bar_at_unit > 0.0) || !std::isfinite(gamma_r_bar_at_unit))
        throw NoSolutionError("matched_probe_intensity: the probe induces no dephasing");
    return gamma_out_target / gamma_r_bar_at_unit;
}

double im_residual(double gamma_r_bar, double gamma_out) {
    if (!(gamma_out > 0.0))
        throw DomainError("im_residual: gamma_out must be positive");
    return (gamma_r_bar - gamma_out) / gamma_out;
}

} // namespace rydswitch::analytics
