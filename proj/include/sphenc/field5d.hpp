#pragma once

#include <cstdint>
#include <vector>

#include "sphenc/vec.hpp"

namespace sphenc {

// Synthetic ground truth for the joint encoding: a sum of sharp directional
// lobes whose axes rotate smoothly with position,
//   f(x, d) = sum_k a_k * exp(s_k * (dot(d, axis_k(x)) - 1)),
// axis_k(x) = base axis rotated about a fixed per-lobe axis by dot(coeff, x).
struct FieldLobe {
    double amplitude = 1.0;
    double sharpness = 8.0;
    Vec3 base_axis{0.0, 0.0, 1.0};
    Vec3 rotation_axis{1.0, 0.0, 0.0};
    Vec3 coeff{0.0, 0.0, 0.0};  // radians of rotation per unit position
};

struct SyntheticField5D {
    std::vector<FieldLobe> lobes;
    double amplitude_sum = 0.0;

    static SyntheticField5D make(int lobe_count, std::uint64_t seed);

    double value(Vec3 x, Vec3 d) const;

    // value / sum of amplitudes, guaranteed in [0, 1] for a sigmoid head.
    double normalized(Vec3 x, Vec3 d) const { return value(x, d) / amplitude_sum; }
};

}  // namespace sphenc
