#include "sphenc/envmap.hpp"

#include <cmath>
#include <numbers>

#include "sphenc/error.hpp"
#include "sphenc/geodesic.hpp"
#include "sphenc/grid_encoding.hpp"
#include "sphenc/rng.hpp"
#include "sphenc/sampling.hpp"

namespace sphenc {

EnvMap make_envmap(int width, int height) {
    if (width < 1 || height < 1) throw config_error("envmap: bad resolution");
    EnvMap m;
    m.width = width;
    m.height = height;
    m.pixels.assign(std::size_t(width) * std::size_t(height) * 3, 0.0f);
    return m;
}

std::array<double, 2> dir_to_uv(Vec3 d) { return polar_map(d); }

Vec3 uv_to_dir(double u, double v) {
    double lon = 2.0 * std::numbers::pi * u - std::numbers::pi;
    double colat = std::numbers::pi * v;
    double s = std::sin(colat);
    return {s * std::cos(lon), s * std::sin(lon), std::cos(colat)};
}

Vec3 texel_center_dir(const EnvMap& map, int x, int y) {
    return uv_to_dir((x + 0.5) / map.width, (y + 0.5) / map.height);
}

std::array<float, 3> envmap_lookup(const EnvMap& map, Vec3 d) {
    if (map.width < 1 || map.height < 1) throw config_error("envmap_lookup: empty map");
    auto uv = dir_to_uv(sanitize_direction(d));

    double s = uv[0] * map.width - 0.5;
    double t = uv[1] * map.height - 0.5;
    double fs = std::floor(s), ft = std::floor(t);
    double fx = s - fs, fy = t - ft;

    int i0 = int(fs) % map.width;
    if (i0 < 0) i0 += map.width;
    int i1 = (i0 + 1) % map.width;
    int j0 = int(ft), j1 = int(ft) + 1;
    j0 = j0 < 0 ? 0 : (j0 >= map.height ? map.height - 1 : j0);
    j1 = j1 < 0 ? 0 : (j1 >= map.height ? map.height - 1 : j1);

    const float* p00 = map.texel(i0, j0);
    const float* p10 = map.texel(i1, j0);
    const float* p01 = map.texel(i0, j1);
    const float* p11 = map.texel(i1, j1);

    std::array<float, 3> out;
    for (int c = 0; c < 3; ++c) {
        double top = (1.0 - fx) * p00[c] + fx * p10[c];
        double bot = (1.0 - fx) * p01[c] + fx * p11[c];
        out[std::size_t(c)] = float((1.0 - fy) * top + fy * bot);
    }
    return out;
}

ProceduralTarget procedural_from_name(const std::string& name) {
    if (name == "constant") return ProceduralTarget::Constant;
    if (name == "gradient") return ProceduralTarget::Gradient;
    if (name == "noise") return ProceduralTarget::IsotropicNoise;
    if (name == "lights") return ProceduralTarget::PointLights;
    throw config_error("unknown procedural target: " + name);
}

std::string procedural_name(ProceduralTarget t) {
    switch (t) {
        case ProceduralTarget::Constant: return "constant";
        case ProceduralTarget::Gradient: return "gradient";
        case ProceduralTarget::IsotropicNoise: return "noise";
        case ProceduralTarget::PointLights: return "lights";
    }
    throw config_error("unknown procedural target");
}

namespace {

struct SphereLobe {
    Vec3 axis;
    double sharpness;
    std::array<double, 3> amplitude;
};

void append_lobes(std::vector<SphereLobe>& lobes, int count, double sharpness, double amp_lo,
                  double amp_hi, std::uint64_t seed) {
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        SphereLobe lobe;
        lobe.axis = sample_uniform_sphere(rng);
        lobe.sharpness = sharpness;
        for (auto& a : lobe.amplitude) a = rng.uniform(amp_lo, amp_hi);
        lobes.push_back(lobe);
    }
}

std::array<double, 3> eval_lobes(const std::vector<SphereLobe>& lobes, double floor_value, Vec3 d) {
    std::array<double, 3> v = {floor_value, floor_value, floor_value};
    for (const auto& lobe : lobes) {
        double t = lobe.sharpness * (dot(d, lobe.axis) - 1.0);
        if (t < -30.0) continue;
        double e = std::exp(t);
        for (int c = 0; c < 3; ++c) v[std::size_t(c)] += lobe.amplitude[std::size_t(c)] * e;
    }
    return v;
}

}  // namespace

EnvMap make_procedural_map(ProceduralTarget target, int width, int height, std::uint64_t seed) {
    EnvMap map = make_envmap(width, height);

    std::vector<SphereLobe> lobes;
    double floor_value = 0.0;
    switch (target) {
        case ProceduralTarget::Constant: break;
        case ProceduralTarget::Gradient: break;
        case ProceduralTarget::IsotropicNoise:
            // Rotation-invariant statistics with detail from roughly 11
            // degrees down to 3, so coarse levels alone cannot resolve it.
            append_lobes(lobes, 64, 50.0, 0.2, 1.0, seed);
            append_lobes(lobes, 256, 200.0, 0.1, 0.5, seed + 101);
            append_lobes(lobes, 512, 320.0, 0.15, 0.65, seed + 404);
            append_lobes(lobes, 1024, 800.0, 0.03, 0.15, seed + 202);
            floor_value = 0.1;
            break;
        case ProceduralTarget::PointLights:
            append_lobes(lobes, 12, 300.0, 2.0, 20.0, seed);
            floor_value = 0.05;
            break;
    }

    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            Vec3 d = texel_center_dir(map, x, y);
            float* px = map.texel(x, y);
            switch (target) {
                case ProceduralTarget::Constant:
                    // Matches the exponential head's starting output, so a
                    // freshly initialized model is already near the optimum.
                    px[0] = 1.0f;
                    px[1] = 1.0f;
                    px[2] = 1.0f;
                    break;
                case ProceduralTarget::Gradient:
                    px[0] = float(0.6 + 0.4 * d.x);
                    px[1] = float(0.6 + 0.4 * d.y);
                    px[2] = float(0.6 + 0.4 * d.z);
                    break;
                default: {
                    auto v = eval_lobes(lobes, floor_value, d);
                    px[0] = float(v[0]);
                    px[1] = float(v[1]);
                    px[2] = float(v[2]);
                }
            }
        }
    return map;
}

}  // namespace sphenc
