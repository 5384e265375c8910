#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>

namespace rydswitch {

using cplx = std::complex<double>;

inline constexpr cplx I{0.0, 1.0};

enum class Variant { cavity, freespace };

inline const char* to_string(Variant v) {
    return v == Variant::cavity ? "cavity" : "freespace";
}

} // namespace rydswitch
