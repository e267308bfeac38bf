#pragma once

#include <array>
#include <cstdint>

#include "sphenc/error.hpp"
#include "sphenc/geodesic.hpp"
#include "sphenc/vec.hpp"

namespace sphenc {

// XOR-of-multiplied-coordinates hashing for table rows. All arithmetic is
// wrapping uint32, so results are identical everywhere.

struct HashConfig {
    std::uint32_t table_cap = 1u << 14;  // T, power of two
    std::uint32_t gamma = 1u << 20;      // continuous-coordinate quantizer

    std::array<std::uint32_t, 3> sphere_primes = {1u, 2654435761u, 805459861u};
    std::array<std::uint32_t, 3> joint_spatial_primes = {1u, 2654435761u, 805459861u};
    std::array<std::uint32_t, 3> joint_dir_primes = {3674653429u, 2097192037u, 1434869437u};
};

inline void validate(const HashConfig& cfg) {
    if (cfg.table_cap == 0 || (cfg.table_cap & (cfg.table_cap - 1)) != 0)
        throw config_error("hash table cap must be a power of two");
    if (cfg.gamma < (1u << 16)) throw config_error("hash gamma must be at least 2^16");
}

// floor((1 + v) * gamma) with v clamped to [-1, 1]; the clamp keeps stray
// end-of-range values (e.g. 1 + 1e-16 after renormalization) in range.
inline std::uint32_t discretize(double v, std::uint32_t gamma) {
    if (v < -1.0) v = -1.0;
    if (v > 1.0) v = 1.0;
    return std::uint32_t((1.0 + v) * double(gamma));
}

inline std::uint32_t hash_sphere(const Vec3& v, const HashConfig& cfg) {
    std::uint32_t h = discretize(v.x, cfg.gamma) * cfg.sphere_primes[0];
    h ^= discretize(v.y, cfg.gamma) * cfg.sphere_primes[1];
    h ^= discretize(v.z, cfg.gamma) * cfg.sphere_primes[2];
    return h;
}

// The spatial and directional terms are independent, which lets callers with
// many (corner, vertex) pairs hash each side once and combine with one XOR.
inline std::uint32_t hash_joint_spatial(const std::array<std::uint32_t, 3>& c, const HashConfig& cfg) {
    return c[0] * cfg.joint_spatial_primes[0] ^ c[1] * cfg.joint_spatial_primes[1] ^
           c[2] * cfg.joint_spatial_primes[2];
}

inline std::uint32_t hash_joint_dir(const Vec3& v, const HashConfig& cfg) {
    std::uint32_t h = discretize(v.x, cfg.gamma) * cfg.joint_dir_primes[0];
    h ^= discretize(v.y, cfg.gamma) * cfg.joint_dir_primes[1];
    h ^= discretize(v.z, cfg.gamma) * cfg.joint_dir_primes[2];
    return h;
}

inline std::uint32_t hash_joint(const std::array<std::uint32_t, 3>& c, const Vec3& v,
                                const HashConfig& cfg) {
    return hash_joint_spatial(c, cfg) ^ hash_joint_dir(v, cfg);
}

inline std::uint64_t sphere_table_rows(int level, const HashConfig& cfg) {
    std::uint64_t n = vertex_count(level);
    return n <= cfg.table_cap ? n : cfg.table_cap;
}

// Row index for one sphere-grid vertex: the dense index while the level's
// vertex set fits in the cap, the position hash afterwards. table_cap is a
// power of two, so the mod is a mask.
inline std::uint32_t phi_sphere(int level, std::uint32_t dense_index, const Vec3& v,
                                const HashConfig& cfg) {
    if (vertex_count(level) <= cfg.table_cap) return dense_index;
    return hash_sphere(v, cfg) & (cfg.table_cap - 1);
}

// Joint (corner, vertex) row. lattice_side is N_l + 1, dir_vertices the vertex
// count of the level's directional grid; their product decides dense vs hashed.
inline std::uint32_t phi_joint(const std::array<std::uint32_t, 3>& corner,
                               std::uint32_t vertex_dense_index, const Vec3& v,
                               std::uint32_t lattice_side, std::uint64_t dir_vertices,
                               const HashConfig& cfg) {
    std::uint64_t side = lattice_side;
    std::uint64_t grid_size = side * side * side * dir_vertices;
    if (grid_size <= cfg.table_cap) {
        // Row-major corner order (z slowest), then the directional vertex.
        std::uint64_t corner_linear = (std::uint64_t(corner[2]) * side + corner[1]) * side + corner[0];
        return std::uint32_t(corner_linear * dir_vertices + vertex_dense_index);
    }
    return hash_joint(corner, v, cfg) & (cfg.table_cap - 1);
}

}  // namespace sphenc
