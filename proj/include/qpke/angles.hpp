#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

namespace qpke {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Maps any angle onto the canonical range (-pi, pi].
inline double canonical_phase(double radians) {
    double r = std::remainder(radians, kTwoPi);
    if (r <= -kPi) {
        r += kTwoPi;
    }
    return r;
}

/// Signed minimal difference a - b on the circle, in (-pi, pi].
inline double circular_difference(double a, double b) {
    return canonical_phase(a - b);
}

/// Absolute minimal distance between two angles, in [0, pi].
inline double circular_distance(double a, double b) {
    return std::abs(circular_difference(a, b));
}

inline constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

struct CircularStats {
    double mean = 0.0;
    double std_dev = 0.0;       // sqrt(-2 ln R), consistent for wrapped Gaussians
    double resultant = 0.0;     // mean resultant length R in [0, 1]
    std::size_t count = 0;
};

/// Circular mean and dispersion of a set of angles. The dispersion estimator
/// recovers the underlying sigma of a wrapped Gaussian even when the spread
/// is a large fraction of the circle, where a plain sample std would be
/// biased low by wrapping.
inline CircularStats circular_stats(std::span<const double> angles) {
    CircularStats s;
    s.count = angles.size();
    if (angles.empty()) return s;
    double c = 0.0, n = 0.0;
    for (double a : angles) {
        c += std::cos(a);
        n += std::sin(a);
    }
    c /= static_cast<double>(angles.size());
    n /= static_cast<double>(angles.size());
    s.mean = std::atan2(n, c);
    s.resultant = std::min(std::hypot(c, n), 1.0);
    s.std_dev = s.resultant > 0.0 ? std::sqrt(std::max(0.0, -2.0 * std::log(s.resultant))) : kPi;
    return s;
}

}  // namespace qpke
