#pragma once

#include "rydswitch/ensemble.hpp"
#include "rydswitch/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>

namespace testing {

using rydswitch::cplx;

// Small deterministic generator for property tests (xorshift64*).
class Gen {
  public:
    explicit Gen(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next() {
        s_ ^= s_ >> 12;
        s_ ^= s_ << 25;
        s_ ^= s_ >> 27;
        return s_ * 0x2545f4914f6cdd1dULL;
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }
    int integer(int lo, int hi) { // inclusive
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    cplx complex(double scale = 1.0) {
        return {uniform(-scale, scale), uniform(-scale, scale)};
    }
    Eigen::VectorXcd complex_vector(int n, double scale = 1.0) {
        Eigen::VectorXcd v(n);
        for (int i = 0; i < n; ++i)
            v(i) = complex(scale);
        return v;
    }
    Eigen::MatrixX3d positions(int n, double spread = 1.0) {
        Eigen::MatrixX3d p(n, 3);
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < 3; ++a)
                p(i, a) = uniform(-spread, spread);
        return p;
    }

  private:
    std::uint64_t s_;
};

// Ensemble with explicit positions (rows x, y, z).
inline rydswitch::ensemble::AtomEnsemble ensemble_at(const Eigen::MatrixX3d& pos, double c6,
                                                     rydswitch::ensemble::GeometryKind kind =
                                                         rydswitch::ensemble::GeometryKind::gaussian3d) {
    rydswitch::ensemble::AtomEnsemble e;
    e.kind = kind;
    e.positions = pos;
    e.c6 = c6;
    e.vdw = rydswitch::ensemble::pairwise_vdw(pos, c6);
    return e;
}

// Atoms on the z axis at the given coordinates.
inline rydswitch::ensemble::AtomEnsemble chain_at(const Eigen::VectorXd& z, double c6) {
    Eigen::MatrixX3d pos = Eigen::MatrixX3d::Zero(z.size(), 3);
    pos.col(2) = z;
    return ensemble_at(pos, c6, rydswitch::ensemble::GeometryKind::gaussian1d);
}

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace testing
