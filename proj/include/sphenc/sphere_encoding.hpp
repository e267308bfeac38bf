#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sphenc/geodesic.hpp"
#include "sphenc/hashing.hpp"
#include "sphenc/tables.hpp"

namespace sphenc {

// Multiresolution directional encoding on the geodesic sphere grid. Each
// level interpolates three vertex feature rows with the chord barycentric
// weights of the containing spherical triangle; levels whose vertex set
// exceeds the table cap index rows by position hash instead of vertex id.

struct HashSphereConfig {
    int levels = 8;
    int features = 2;
    HashConfig hash;

    int feature_dim() const { return levels * features; }
};

inline void validate(const HashSphereConfig& cfg) {
    if (cfg.levels < 1 || cfg.levels > kMaxTraversalLevel)
        throw config_error("hash-sphere: levels must be in [1, 12]");
    if (cfg.features != 1 && cfg.features != 2 && cfg.features != 4 && cfg.features != 8)
        throw config_error("hash-sphere: features must be one of 1, 2, 4, 8");
    validate(cfg.hash);
}

inline std::vector<std::uint64_t> sphere_level_rows(const HashSphereConfig& cfg) {
    std::vector<std::uint64_t> rows(std::size_t(cfg.levels));
    for (int l = 0; l < cfg.levels; ++l) rows[std::size_t(l)] = sphere_table_rows(l, cfg.hash);
    return rows;
}

// Deepest level that still indexes vertices directly (-1 if even level 0 is
// hashed). Only these levels need stored face -> vertex tables.
inline int sphere_dense_levels_needed(const HashSphereConfig& cfg) {
    int last = -1;
    for (int l = 0; l < cfg.levels; ++l)
        if (vertex_count(l) <= cfg.hash.table_cap) last = l;
    if (last > GeodesicGrid::kMaxDenseLevel)
        throw config_error("hash-sphere: dense levels exceed the stored-table guard");
    return last;
}

// Shared traversal: locates once, then refines level by level, handing each
// level's three row indices and barycentric weights to fn.
template <typename RowFn>
void traverse_sphere(Vec3 d, const HashSphereConfig& cfg, const GeodesicGrid& grid, RowFn&& fn) {
    Located loc = icosahedron_intersection(d);
    const std::uint32_t mask = cfg.hash.table_cap - 1;
    for (int l = 0; l < cfg.levels; ++l) {
        std::uint32_t rows[3];
        if (vertex_count(l) <= cfg.hash.table_cap) {
            const auto& fv = grid.face_vertices(l, loc.tri.face_id);
            rows[0] = fv[0];
            rows[1] = fv[1];
            rows[2] = fv[2];
        } else {
            for (int i = 0; i < 3; ++i) rows[i] = hash_sphere(loc.tri.v[i], cfg.hash) & mask;
        }
        fn(l, rows, loc.bary);
        if (l + 1 < cfg.levels) {
            Refined r = refine_triangle(loc.tri, d);
            loc.tri = r.tri;
            loc.bary = r.bary;
        }
    }
}

template <typename S>
void encode_sphere(Vec3 d, const LevelTables<S>& tables, const HashSphereConfig& cfg,
                   const GeodesicGrid& grid, std::span<S> out) {
    const int F = cfg.features;
    traverse_sphere(d, cfg, grid, [&](int l, const std::uint32_t* rows, const Barycentric& bary) {
        S* f_l = out.data() + std::size_t(l) * F;
        for (int f = 0; f < F; ++f) f_l[f] = S(0);
        for (int i = 0; i < 3; ++i) {
            S w = S(bary[i]);
            const S* row = tables[std::size_t(l)].data() + std::uint64_t(rows[i]) * F;
            for (int f = 0; f < F; ++f) f_l[f] += w * row[f];
        }
    });
}

template <typename S>
std::vector<S> encode_sphere(Vec3 d, const LevelTables<S>& tables, const HashSphereConfig& cfg,
                             const GeodesicGrid& grid) {
    std::vector<S> out(std::size_t(cfg.feature_dim()));
    encode_sphere(d, tables, cfg, grid, std::span<S>(out));
    return out;
}

template <typename S>
void encode_sphere_batch(std::span<const Vec3> dirs, const LevelTables<S>& tables,
                         const HashSphereConfig& cfg, const GeodesicGrid& grid, std::span<S> out) {
    const std::size_t dim = std::size_t(cfg.feature_dim());
    for (std::size_t i = 0; i < dirs.size(); ++i)
        encode_sphere(dirs[i], tables, cfg, grid, out.subspan(i * dim, dim));
}

// Accumulates d(upstream . features)/d(theta) directly into table-shaped
// gradient arrays (the training hot path; no per-sample allocation).
template <typename S>
void encode_sphere_backward_scatter(Vec3 d, std::span<const S> upstream, const HashSphereConfig& cfg,
                                    const GeodesicGrid& grid, LevelTables<S>& grads) {
    const int F = cfg.features;
    traverse_sphere(d, cfg, grid, [&](int l, const std::uint32_t* rows, const Barycentric& bary) {
        const S* up = upstream.data() + std::size_t(l) * F;
        for (int i = 0; i < 3; ++i) {
            S w = S(bary[i]);
            S* dst = grads[std::size_t(l)].data() + std::uint64_t(rows[i]) * F;
            for (int f = 0; f < F; ++f) dst[f] += w * up[f];
        }
    });
}

// Sparse single-sample gradient: at most three rows per level, collisions
// merged by canonicalize().
template <typename S>
GradientBuffer<S> encode_sphere_backward(Vec3 d, std::span<const S> upstream,
                                         const HashSphereConfig& cfg, const GeodesicGrid& grid) {
    GradientBuffer<S> buf(std::size_t(cfg.levels), cfg.features);
    const int F = cfg.features;
    std::vector<S> entry(static_cast<std::size_t>(F));
    traverse_sphere(d, cfg, grid, [&](int l, const std::uint32_t* rows, const Barycentric& bary) {
        const S* up = upstream.data() + std::size_t(l) * F;
        for (int i = 0; i < 3; ++i) {
            S w = S(bary[i]);
            for (int f = 0; f < F; ++f) entry[std::size_t(f)] = w * up[f];
            buf.add(std::size_t(l), rows[i], entry.data());
        }
    });
    buf.canonicalize();
    return buf;
}

}  // namespace sphenc
