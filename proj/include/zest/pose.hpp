#pragma once

#include <cmath>
#include <numbers>

namespace zest {

// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

// Planar robot configuration: position in meters, heading in (-pi, pi].
struct PoseSE2 {
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0;

    PoseSE2() = default;
    PoseSE2(double x_, double y_, double psi_) : x(x_), y(y_), psi(normalize_angle(psi_)) {}
};

inline double position_distance(const PoseSE2& a, const PoseSE2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

inline double heading_difference(const PoseSE2& a, const PoseSE2& b) {
    return normalize_angle(a.psi - b.psi);
}

}  // namespace zest
