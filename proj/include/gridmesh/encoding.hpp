#pragma once

#include <cmath>

#include "gridmesh/core.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// Sinusoidal encodings of a displacement vector d, one band per frequency
// exponent i: component cos(d_axis / 2^i) or sin(d_axis / 2^i).
//
// The cosine map is an exactly even function of d and the sine map exactly
// odd; both are enforced bitwise by evaluating on |d| and transferring the
// sign, so downstream symmetry guarantees do not depend on libm internals.
// ---------------------------------------------------------------------------

constexpr int kPeFrequencies = 20;           // i = 0..19
constexpr int kPeDim = 3 * kPeFrequencies;   // 60

// out[axis * kPeFrequencies + i] = cos(d[axis] / 2^i)
inline void cosine_encoding(const Vec3& d, double* out) {
    for (int axis = 0; axis < 3; ++axis) {
        double x = std::fabs(d[axis]);
        double scale = 1.0;
        for (int i = 0; i < kPeFrequencies; ++i) {
            out[axis * kPeFrequencies + i] = std::cos(x * scale);
            scale *= 0.5;
        }
    }
}

// out[axis * kPeFrequencies + i] = sin(d[axis] / 2^i)
inline void sine_encoding(const Vec3& d, double* out) {
    for (int axis = 0; axis < 3; ++axis) {
        double x = std::fabs(d[axis]);
        double sign = d[axis] < 0.0 ? -1.0 : 1.0;
        double scale = 1.0;
        for (int i = 0; i < kPeFrequencies; ++i) {
            out[axis * kPeFrequencies + i] = sign * std::sin(x * scale);
            scale *= 0.5;
        }
    }
}

// Multiband point embedding for the encoder lift: raw coordinates plus
// sin/cos pairs at doubling frequencies. Gives the per-point MLP spatial
// resolution well below the input spacing from the first step.
inline int lift_encoding_dim(int bands) { return 3 + 6 * bands; }

inline void lift_encoding(const Vec3& p, int bands, double* out) {
    out[0] = p.x();
    out[1] = p.y();
    out[2] = p.z();
    int at = 3;
    double freq = 2.0 * M_PI;
    for (int b = 0; b < bands; ++b) {
        for (int axis = 0; axis < 3; ++axis) {
            out[at++] = std::sin(freq * p[axis]);
            out[at++] = std::cos(freq * p[axis]);
        }
        freq *= 2.0;
    }
}

// odd tanh: bitwise antisymmetric under negation of x
inline double odd_tanh(double x) {
    double t = std::tanh(std::fabs(x));
    return x < 0.0 ? -t : t;
}

inline double odd_tanh_derivative_from_value(double t) { return 1.0 - t * t; }

// numerically symmetric sigmoid: sigmoid(z) + sigmoid(-z) == 1 to rounding
inline double stable_sigmoid(double z) {
    if (z >= 0.0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace gridmesh
