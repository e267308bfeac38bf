#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "sphenc/error.hpp"
#include "sphenc/rng.hpp"
#include "sphenc/vec.hpp"

namespace sphenc {

// Area-uniform via inversion: z uniform, azimuth uniform.
inline Vec3 sample_uniform_sphere(Rng& rng) {
    double z = rng.uniform(-1.0, 1.0);
    double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

inline std::vector<Vec3> fibonacci_sphere(int n) {
    if (n < 1) throw config_error("fibonacci_sphere: need at least one direction");
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> dirs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / double(n);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden_angle * double(i);
        dirs[std::size_t(i)] = {r * std::cos(phi), r * std::sin(phi), z};
    }
    return dirs;
}

inline Vec3 rotate_about(Vec3 v, Vec3 unit_axis, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return c * v + s * cross(unit_axis, v) + (1.0 - c) * dot(unit_axis, v) * unit_axis;
}

// Rotates each direction by the given angle along its own great circle (a
// single global rotation would leave points near the rotation axis nearly
// fixed, defeating a minimum-separation requirement). The tangent is chosen
// deterministically from a fixed helper vector.
inline std::vector<Vec3> rotate_each(const std::vector<Vec3>& dirs, double angle) {
    const Vec3 h1 = normalized({0.2817, 0.5396, 0.7935});
    const Vec3 h2 = normalized({0.9363, -0.2751, 0.2181});
    std::vector<Vec3> out;
    out.reserve(dirs.size());
    for (Vec3 d : dirs) {
        Vec3 h = std::abs(dot(d, h1)) < 0.98 ? h1 : h2;
        Vec3 t = normalized(h - dot(h, d) * d);
        out.push_back(normalized(std::cos(angle) * d + std::sin(angle) * t));
    }
    return out;
}

// Minimum angle between any member of a and any member of b.
inline double min_angular_gap(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double best = std::numbers::pi;
    for (const Vec3& p : a)
        for (const Vec3& q : b) best = std::min(best, angle_between(p, q));
    return best;
}

// Area-uniform within a colatitude band [lo, hi] (radians from +z).
inline Vec3 sample_latitude_band(Rng& rng, double colat_lo, double colat_hi) {
    double z_hi = std::cos(colat_lo), z_lo = std::cos(colat_hi);
    double z = rng.uniform(z_lo, z_hi);
    double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace sphenc
