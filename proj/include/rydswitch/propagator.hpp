#pragma once

#include "rydswitch/dynamics.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rydswitch::propagator {

// Exact no-jump propagation on a fixed time grid. The one-step map
// exp(M h) is formed once per generator; within a step the drive is
// replaced by the cubic through f at t, t+h/3, t+2h/3, t+h and integrated
// exactly.
class GridPropagator {
  public:
    GridPropagator() = default;
    GridPropagator(const dynamics::Generator& g, double step, int coarse_factor = 8);

    double step() const { return step_; }
    double coarse_step() const { return step_ * coarse_factor_; }
    int coarse_factor() const { return coarse_factor_; }
    // coarse_factor^2 steps
    double super_step() const { return coarse_step() * coarse_factor_; }
    int dim() const { return static_cast<int>(fine_.rows()); }

    // psi(t + h) without drive
    void free_step(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const;
    // psi(t + coarse_factor * h) without drive
    void coarse(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const;
    // psi(t + coarse_factor^2 * h) without drive
    void super(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const;
    // psi(t + h) with drive weight * f on [t, t + h]
    void driven_step(const Eigen::VectorXcd& psi, double t, double weight,
                     Eigen::VectorXcd& out) const;

  private:
    double step_ = 0.0;
    int coarse_factor_ = 1;
    dynamics::GaussianPulse pulse_;
    double drive_off_ = 0.0;
    Eigen::MatrixXcd fine_;
    Eigen::MatrixXcd coarse_;
    Eigen::MatrixXcd super_;
    Eigen::MatrixXcd drive_; // column k: int_0^h exp(M(h-s)) b s^k ds
};

// Grid step that puts the pulse end on a node: t_end / ceil(t_end / (tau / per_tau)).
double pulse_grid_step(const dynamics::GaussianPulse& pulse, int per_tau, int& n_pulse_end);

// Composite Simpson weights on n + 1 equally spaced nodes; for odd n the
// last three panels use the 3/8 rule.
std::vector<double> simpson_weights(int n, double h);

// Deterministic storage from the jump-free driven path sampled on a grid.
struct GridStorage {
    double storage_probability = 0.0; // dephasing(0..pulse end) + sum |r(pulse end)|^2
    double rydberg_at_pulse_end = 0.0;
    Eigen::VectorXd rydberg_weights;  // int_0^{pulse end} |r_k|^2 dt
};

// nodes[i] = psi(i h) for i = 0..n_pulse_end (more nodes are ignored).
GridStorage storage_from_nodes(const dynamics::Generator& g,
                               const std::vector<Eigen::VectorXcd>& nodes, double h,
                               int n_pulse_end);

// Same quantities as dynamics::linear_run, with exact exponential steps and
// Simpson quadrature; much cheaper for long pulses.
GridStorage grid_storage(const dynamics::Generator& g, int per_tau = 64);

} // namespace rydswitch::propagator
