#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sphenc/geodesic.hpp"
#include "sphenc/hashing.hpp"
#include "sphenc/tables.hpp"

namespace sphenc {

// Joint 5D encoding: per level, the outer product of a trilinear spatial
// stencil (8 voxel corners) and a geodesic directional stencil (3 triangle
// vertices) indexes one table, 24 weighted rows in total. The directional
// grid refines every other spatial level, capped at dir_levels_cap.

struct JointConfig {
    int levels = 8;
    int dir_levels_cap = 4;  // cap on the directional subdivision depth
    int features = 2;
    std::uint32_t base_resolution = 16;
    double per_level_scale = 2.0;
    Vec3 box_min{0.0, 0.0, 0.0};  // spatial domain mapped to the unit cube
    Vec3 box_max{1.0, 1.0, 1.0};
    HashConfig hash;

    int feature_dim() const { return levels * features; }
};

inline int directional_level(int l, const JointConfig& cfg) {
    int m = l / 2;
    return m < cfg.dir_levels_cap ? m : cfg.dir_levels_cap;
}

inline std::uint32_t joint_spatial_resolution(int l, const JointConfig& cfg) {
    return std::uint32_t(std::floor(double(cfg.base_resolution) * std::pow(cfg.per_level_scale, l)));
}

inline std::uint64_t joint_grid_size(int l, const JointConfig& cfg) {
    std::uint64_t side = joint_spatial_resolution(l, cfg) + 1ull;
    return side * side * side * vertex_count(directional_level(l, cfg));
}

inline void validate(const JointConfig& cfg) {
    if (cfg.levels < 1 || cfg.levels > 2 * (kMaxTraversalLevel + 1))
        throw config_error("joint encoding: bad level count");
    if (cfg.dir_levels_cap < 0 || cfg.dir_levels_cap > kMaxTraversalLevel)
        throw config_error("joint encoding: directional cap out of range");
    if (cfg.features != 1 && cfg.features != 2 && cfg.features != 4 && cfg.features != 8)
        throw config_error("joint encoding: features must be one of 1, 2, 4, 8");
    if (cfg.base_resolution < 1) throw config_error("joint encoding: base resolution must be >= 1");
    if (!(cfg.per_level_scale > 1.0)) throw config_error("joint encoding: per-level scale must exceed 1");
    if (!(cfg.box_max.x > cfg.box_min.x && cfg.box_max.y > cfg.box_min.y && cfg.box_max.z > cfg.box_min.z))
        throw config_error("joint encoding: empty domain box");
    validate(cfg.hash);
}

inline std::vector<std::uint64_t> joint_level_rows(const JointConfig& cfg) {
    std::vector<std::uint64_t> rows(std::size_t(cfg.levels));
    for (int l = 0; l < cfg.levels; ++l) {
        std::uint64_t g = joint_grid_size(l, cfg);
        rows[std::size_t(l)] = g <= cfg.hash.table_cap ? g : cfg.hash.table_cap;
    }
    return rows;
}

// Deepest directional level whose vertex ids are needed (dense joint levels
// index vertices directly; grid sizes grow with l, so these form a prefix).
inline int joint_dense_dir_levels_needed(const JointConfig& cfg) {
    int need = -1;
    for (int l = 0; l < cfg.levels; ++l)
        if (joint_grid_size(l, cfg) <= cfg.hash.table_cap) need = directional_level(l, cfg);
    if (need > GeodesicGrid::kMaxDenseLevel)
        throw config_error("joint encoding: dense levels exceed the stored-table guard");
    return need;
}

struct TrilinearStencil {
    std::array<std::uint32_t, 3> base;  // lowest corner of the containing voxel
    double frac[3];

    std::array<std::uint32_t, 3> corner(int c) const {
        return {base[0] + std::uint32_t(c & 1), base[1] + std::uint32_t((c >> 1) & 1),
                base[2] + std::uint32_t((c >> 2) & 1)};
    }
    double weight(int c) const {
        double w = 1.0;
        for (int a = 0; a < 3; ++a) w *= (c >> a) & 1 ? frac[a] : 1.0 - frac[a];
        return w;
    }
};

// p must already be in [0,1]^3 (clamped). Points on the far boundary land in
// the last voxel with fractional coordinate 1.
inline TrilinearStencil trilinear_stencil(const double p[3], std::uint32_t resolution) {
    TrilinearStencil s;
    for (int a = 0; a < 3; ++a) {
        double scaled = p[a] * double(resolution);
        double cell = std::floor(scaled);
        if (cell > double(resolution - 1)) cell = double(resolution - 1);
        if (cell < 0.0) cell = 0.0;
        s.base[std::size_t(a)] = std::uint32_t(cell);
        s.frac[a] = scaled - cell;
    }
    return s;
}

inline void joint_unit_position(const Vec3& x, const JointConfig& cfg, double out[3]) {
    const double mn[3] = {cfg.box_min.x, cfg.box_min.y, cfg.box_min.z};
    const double mx[3] = {cfg.box_max.x, cfg.box_max.y, cfg.box_max.z};
    const double in[3] = {x.x, x.y, x.z};
    for (int a = 0; a < 3; ++a) {
        double u = (in[a] - mn[a]) / (mx[a] - mn[a]);
        out[a] = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
    }
}

// Shared 24-term sweep. fn(level, rows[24], weights[24]) where entry c*3+i
// pairs spatial corner c with triangle vertex i.
template <typename RowFn>
void traverse_joint(Vec3 x, Vec3 d, const JointConfig& cfg, const GeodesicGrid& grid, RowFn&& fn) {
    double p[3];
    joint_unit_position(x, cfg, p);
    Located loc = icosahedron_intersection(d);
    const std::uint32_t mask = cfg.hash.table_cap - 1;

    std::uint32_t rows[24];
    double weights[24];
    for (int l = 0; l < cfg.levels; ++l) {
        int m = directional_level(l, cfg);
        while (loc.tri.level < m) {
            Refined r = refine_triangle(loc.tri, d);
            loc.tri = r.tri;
            loc.bary = r.bary;
        }

        std::uint32_t res = joint_spatial_resolution(l, cfg);
        TrilinearStencil st = trilinear_stencil(p, res);
        std::uint64_t side = std::uint64_t(res) + 1;
        std::uint64_t nverts = vertex_count(m);
        bool dense = side * side * side * nverts <= cfg.hash.table_cap;

        if (dense) {
            const auto& fv = grid.face_vertices(m, loc.tri.face_id);
            for (int c = 0; c < 8; ++c) {
                auto corner = st.corner(c);
                std::uint64_t corner_linear = (std::uint64_t(corner[2]) * side + corner[1]) * side + corner[0];
                double wc = st.weight(c);
                for (int i = 0; i < 3; ++i) {
                    rows[c * 3 + i] = std::uint32_t(corner_linear * nverts + fv[std::size_t(i)]);
                    weights[c * 3 + i] = wc * loc.bary[i];
                }
            }
        } else {
            std::uint32_t hc[8], hv[3];
            for (int c = 0; c < 8; ++c) hc[c] = hash_joint_spatial(st.corner(c), cfg.hash);
            for (int i = 0; i < 3; ++i) hv[i] = hash_joint_dir(loc.tri.v[i], cfg.hash);
            for (int c = 0; c < 8; ++c) {
                double wc = st.weight(c);
                for (int i = 0; i < 3; ++i) {
                    rows[c * 3 + i] = (hc[c] ^ hv[i]) & mask;
                    weights[c * 3 + i] = wc * loc.bary[i];
                }
            }
        }
        fn(l, rows, weights);
    }
}

template <typename S>
void encode_joint(Vec3 x, Vec3 d, const LevelTables<S>& tables, const JointConfig& cfg,
                  const GeodesicGrid& grid, std::span<S> out) {
    const int F = cfg.features;
    traverse_joint(x, d, cfg, grid, [&](int l, const std::uint32_t* rows, const double* weights) {
        S* f_l = out.data() + std::size_t(l) * F;
        for (int f = 0; f < F; ++f) f_l[f] = S(0);
        for (int e = 0; e < 24; ++e) {
            S w = S(weights[e]);
            const S* row = tables[std::size_t(l)].data() + std::uint64_t(rows[e]) * F;
            for (int f = 0; f < F; ++f) f_l[f] += w * row[f];
        }
    });
}

template <typename S>
std::vector<S> encode_joint(Vec3 x, Vec3 d, const LevelTables<S>& tables, const JointConfig& cfg,
                            const GeodesicGrid& grid) {
    std::vector<S> out(std::size_t(cfg.feature_dim()));
    encode_joint(x, d, tables, cfg, grid, std::span<S>(out));
    return out;
}

template <typename S>
void encode_joint_backward_scatter(Vec3 x, Vec3 d, std::span<const S> upstream, const JointConfig& cfg,
                                   const GeodesicGrid& grid, LevelTables<S>& grads) {
    const int F = cfg.features;
    traverse_joint(x, d, cfg, grid, [&](int l, const std::uint32_t* rows, const double* weights) {
        const S* up = upstream.data() + std::size_t(l) * F;
        for (int e = 0; e < 24; ++e) {
            S w = S(weights[e]);
            S* dst = grads[std::size_t(l)].data() + std::uint64_t(rows[e]) * F;
            for (int f = 0; f < F; ++f) dst[f] += w * up[f];
        }
    });
}

template <typename S>
GradientBuffer<S> encode_joint_backward(Vec3 x, Vec3 d, std::span<const S> upstream,
                                        const JointConfig& cfg, const GeodesicGrid& grid) {
    GradientBuffer<S> buf(std::size_t(cfg.levels), cfg.features);
    const int F = cfg.features;
    std::vector<S> entry(static_cast<std::size_t>(F));
    traverse_joint(x, d, cfg, grid, [&](int l, const std::uint32_t* rows, const double* weights) {
        const S* up = upstream.data() + std::size_t(l) * F;
        for (int e = 0; e < 24; ++e) {
            S w = S(weights[e]);
            for (int f = 0; f < F; ++f) entry[std::size_t(f)] = w * up[f];
            buf.add(std::size_t(l), rows[e], entry.data());
        }
    });
    buf.canonicalize();
    return buf;
}

}  // namespace sphenc
