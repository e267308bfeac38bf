#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "sphenc/error.hpp"
#include "sphenc/tables.hpp"
#include "sphenc/vec.hpp"

namespace sphenc {

// Flat multiresolution grid baselines over [0,1]^k, k in {2,3}, with the
// usual dense/hashed switch per level. One implementation covers both the
// 2D lat-long parameterization and the 3D embedding of directions. The table
// cap here may be any positive integer (hashed levels use a plain mod), so
// baselines can be sized to match another encoder's parameter count exactly.

struct GridEncodingConfig {
    int dims = 2;  // k
    int levels = 8;
    int features = 2;
    std::uint32_t base_resolution = 8;
    double per_level_scale = 2.0;
    std::uint32_t table_cap = 1u << 14;
    std::array<std::uint32_t, 3> primes = {1u, 2654435761u, 805459861u};

    int feature_dim() const { return levels * features; }
};

inline void validate(const GridEncodingConfig& cfg) {
    if (cfg.dims != 2 && cfg.dims != 3) throw config_error("grid encoding: dims must be 2 or 3");
    if (cfg.levels < 1 || cfg.levels > 24) throw config_error("grid encoding: bad level count");
    if (cfg.features != 1 && cfg.features != 2 && cfg.features != 4 && cfg.features != 8)
        throw config_error("grid encoding: features must be one of 1, 2, 4, 8");
    if (cfg.base_resolution < 1) throw config_error("grid encoding: base resolution must be >= 1");
    if (!(cfg.per_level_scale > 1.0)) throw config_error("grid encoding: per-level scale must exceed 1");
    if (cfg.table_cap == 0) throw config_error("grid encoding: table cap must be positive");
}

inline std::uint32_t grid_resolution(int l, const GridEncodingConfig& cfg) {
    return std::uint32_t(std::floor(double(cfg.base_resolution) * std::pow(cfg.per_level_scale, l)));
}

inline std::uint64_t grid_corner_count(int l, const GridEncodingConfig& cfg) {
    std::uint64_t side = grid_resolution(l, cfg) + 1ull;
    std::uint64_t n = 1;
    for (int a = 0; a < cfg.dims; ++a) n *= side;
    return n;
}

inline std::vector<std::uint64_t> grid_level_rows(const GridEncodingConfig& cfg) {
    std::vector<std::uint64_t> rows(std::size_t(cfg.levels));
    for (int l = 0; l < cfg.levels; ++l) {
        std::uint64_t n = grid_corner_count(l, cfg);
        rows[std::size_t(l)] = n <= cfg.table_cap ? n : cfg.table_cap;
    }
    return rows;
}

// Lat-long unit square: u from longitude (seam at +-pi), v from colatitude
// (0 at +z). The seam and poles are deliberately left unstitched; that
// distortion is what this baseline exists to demonstrate.
inline std::array<double, 2> polar_map(Vec3 d) {
    double u = (std::atan2(d.y, d.x) + std::numbers::pi) / (2.0 * std::numbers::pi);
    double z = d.z < -1.0 ? -1.0 : (d.z > 1.0 ? 1.0 : d.z);
    double v = std::acos(z) / std::numbers::pi;
    return {u, v};
}

inline std::array<double, 3> cartesian_map(Vec3 d) {
    return {(d.x + 1.0) / 2.0, (d.y + 1.0) / 2.0, (d.z + 1.0) / 2.0};
}

// fn(level, rows[2^k], weights[2^k]).
template <typename RowFn>
void traverse_grid(const double* p, const GridEncodingConfig& cfg, RowFn&& fn) {
    const int k = cfg.dims;
    const int corners = 1 << k;
    std::uint32_t rows[8];
    double weights[8];

    for (int l = 0; l < cfg.levels; ++l) {
        std::uint32_t res = grid_resolution(l, cfg);
        std::uint64_t side = std::uint64_t(res) + 1;
        std::uint64_t ncorners = 1;
        for (int a = 0; a < k; ++a) ncorners *= side;
        bool dense = ncorners <= cfg.table_cap;

        std::uint32_t base[3];
        double frac[3];
        for (int a = 0; a < k; ++a) {
            double x = p[a] < 0.0 ? 0.0 : (p[a] > 1.0 ? 1.0 : p[a]);
            double scaled = x * double(res);
            double cell = std::floor(scaled);
            if (cell > double(res - 1)) cell = double(res - 1);
            if (cell < 0.0) cell = 0.0;
            base[a] = std::uint32_t(cell);
            frac[a] = scaled - cell;
        }

        for (int c = 0; c < corners; ++c) {
            double w = 1.0;
            std::uint32_t coord[3];
            for (int a = 0; a < k; ++a) {
                int bit = (c >> a) & 1;
                coord[a] = base[a] + std::uint32_t(bit);
                w *= bit ? frac[a] : 1.0 - frac[a];
            }
            weights[c] = w;
            if (dense) {
                // Row-major, last axis slowest.
                std::uint64_t lin = coord[std::size_t(k) - 1];
                for (int a = k - 2; a >= 0; --a) lin = lin * side + coord[a];
                rows[c] = std::uint32_t(lin);
            } else {
                std::uint32_t h = 0;
                for (int a = 0; a < k; ++a) h ^= coord[a] * cfg.primes[std::size_t(a)];
                rows[c] = h % cfg.table_cap;
            }
        }
        fn(l, rows, weights);
    }
}

template <typename S>
void encode_grid(const double* p, const LevelTables<S>& tables, const GridEncodingConfig& cfg,
                 std::span<S> out) {
    const int F = cfg.features;
    const int corners = 1 << cfg.dims;
    traverse_grid(p, cfg, [&](int l, const std::uint32_t* rows, const double* weights) {
        S* f_l = out.data() + std::size_t(l) * F;
        for (int f = 0; f < F; ++f) f_l[f] = S(0);
        for (int c = 0; c < corners; ++c) {
            S w = S(weights[c]);
            const S* row = tables[std::size_t(l)].data() + std::uint64_t(rows[c]) * F;
            for (int f = 0; f < F; ++f) f_l[f] += w * row[f];
        }
    });
}

template <typename S>
std::vector<S> encode_grid(const double* p, const LevelTables<S>& tables,
                           const GridEncodingConfig& cfg) {
    std::vector<S> out(std::size_t(cfg.feature_dim()));
    encode_grid(p, tables, cfg, std::span<S>(out));
    return out;
}

template <typename S>
void encode_grid_backward_scatter(const double* p, std::span<const S> upstream,
                                  const GridEncodingConfig& cfg, LevelTables<S>& grads) {
    const int F = cfg.features;
    const int corners = 1 << cfg.dims;
    traverse_grid(p, cfg, [&](int l, const std::uint32_t* rows, const double* weights) {
        const S* up = upstream.data() + std::size_t(l) * F;
        for (int c = 0; c < corners; ++c) {
            S w = S(weights[c]);
            S* dst = grads[std::size_t(l)].data() + std::uint64_t(rows[c]) * F;
            for (int f = 0; f < F; ++f) dst[f] += w * up[f];
        }
    });
}

template <typename S>
GradientBuffer<S> encode_grid_backward(const double* p, std::span<const S> upstream,
                                       const GridEncodingConfig& cfg) {
    GradientBuffer<S> buf(std::size_t(cfg.levels), cfg.features);
    const int F = cfg.features;
    const int corners = 1 << cfg.dims;
    std::vector<S> entry(static_cast<std::size_t>(F));
    traverse_grid(p, cfg, [&](int l, const std::uint32_t* rows, const double* weights) {
        const S* up = upstream.data() + std::size_t(l) * F;
        for (int c = 0; c < corners; ++c) {
            S w = S(weights[c]);
            for (int f = 0; f < F; ++f) entry[std::size_t(f)] = w * up[f];
            buf.add(std::size_t(l), rows[c], entry.data());
        }
    });
    buf.canonicalize();
    return buf;
}

}  // namespace sphenc
