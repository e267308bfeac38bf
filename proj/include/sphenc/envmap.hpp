#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sphenc/vec.hpp"

namespace sphenc {

// Lat-long radiance map, row 0 at the north pole (+z), 3 channels, linear
// values (HDR: no upper bound).
struct EnvMap {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;  // height * width * 3

    float* texel(int x, int y) { return pixels.data() + 3 * (std::size_t(y) * width + x); }
    const float* texel(int x, int y) const {
        return pixels.data() + 3 * (std::size_t(y) * width + x);
    }
};

EnvMap make_envmap(int width, int height);

// Direction <-> lat-long square. u wraps at the +-pi longitude seam, v is
// colatitude / pi.
std::array<double, 2> dir_to_uv(Vec3 d);
Vec3 uv_to_dir(double u, double v);
Vec3 texel_center_dir(const EnvMap& map, int x, int y);

// Bilinear fetch with longitude wrap-around and pole-row clamping.
std::array<float, 3> envmap_lookup(const EnvMap& map, Vec3 d);

enum class ProceduralTarget { Constant, Gradient, IsotropicNoise, PointLights };

ProceduralTarget procedural_from_name(const std::string& name);
std::string procedural_name(ProceduralTarget t);

// Built-in analytic targets baked at texel centers. "IsotropicNoise" sums
// random equal-sharpness spherical lobes, so its detail scale is uniform in
// angle (per-texel noise in lat-long space would not be). "PointLights" is a
// sparse mixture of very sharp lobes over a dim ambient floor.
EnvMap make_procedural_map(ProceduralTarget target, int width, int height, std::uint64_t seed);

}  // namespace sphenc
