#include "sphenc/field5d.hpp"

#include <cmath>

#include "sphenc/error.hpp"
#include "sphenc/sampling.hpp"

namespace sphenc {

SyntheticField5D SyntheticField5D::make(int lobe_count, std::uint64_t seed) {
    if (lobe_count < 1) throw config_error("synthetic field: need at least one lobe");
    Rng rng(seed);
    SyntheticField5D field;
    field.lobes.resize(std::size_t(lobe_count));
    for (auto& lobe : field.lobes) {
        lobe.amplitude = rng.uniform(0.3, 1.0);
        lobe.sharpness = rng.uniform(4.0, 24.0);
        lobe.base_axis = sample_uniform_sphere(rng);
        lobe.rotation_axis = sample_uniform_sphere(rng);
        lobe.coeff = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        field.amplitude_sum += lobe.amplitude;
    }
    return field;
}

double SyntheticField5D::value(Vec3 x, Vec3 d) const {
    double v = 0.0;
    for (const auto& lobe : lobes) {
        double angle = dot(lobe.coeff, x);
        Vec3 axis = sphenc::normalized(rotate_about(lobe.base_axis, lobe.rotation_axis, angle));
        v += lobe.amplitude * std::exp(lobe.sharpness * (dot(d, axis) - 1.0));
    }
    return v;
}

}  // namespace sphenc
