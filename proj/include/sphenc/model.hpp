#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sphenc/grid_encoding.hpp"
#include "sphenc/joint_encoding.hpp"
#include "sphenc/nn.hpp"
#include "sphenc/sphere_encoding.hpp"

namespace sphenc {

enum class EncoderKind : std::uint32_t {
    HashSphere = 0,       // geodesic directional encoding
    HashGridSphere = 1,   // joint 5D spatio-directional encoding
    Grid2dPolar = 2,      // lat-long square baseline
    Grid3dCartesian = 3,  // unit-cube embedding baseline
};

std::string encoder_name(EncoderKind kind);
EncoderKind encoder_from_name(const std::string& name);

struct EncoderSettings {
    EncoderKind kind = EncoderKind::HashSphere;
    HashSphereConfig sphere;
    JointConfig joint;
    GridEncodingConfig grid;
};

inline void validate(const EncoderSettings& e) {
    switch (e.kind) {
        case EncoderKind::HashSphere: validate(e.sphere); break;
        case EncoderKind::HashGridSphere: validate(e.joint); break;
        case EncoderKind::Grid2dPolar:
            validate(e.grid);
            if (e.grid.dims != 2) throw config_error("2d polar encoder requires dims == 2");
            break;
        case EncoderKind::Grid3dCartesian:
            validate(e.grid);
            if (e.grid.dims != 3) throw config_error("3d cartesian encoder requires dims == 3");
            break;
        default: throw config_error("unknown encoder kind");
    }
}

inline std::vector<std::uint64_t> level_rows(const EncoderSettings& e) {
    switch (e.kind) {
        case EncoderKind::HashSphere: return sphere_level_rows(e.sphere);
        case EncoderKind::HashGridSphere: return joint_level_rows(e.joint);
        default: return grid_level_rows(e.grid);
    }
}

inline int feature_dim(const EncoderSettings& e) {
    switch (e.kind) {
        case EncoderKind::HashSphere: return e.sphere.feature_dim();
        case EncoderKind::HashGridSphere: return e.joint.feature_dim();
        default: return e.grid.feature_dim();
    }
}

inline int encoder_features(const EncoderSettings& e) {
    switch (e.kind) {
        case EncoderKind::HashSphere: return e.sphere.features;
        case EncoderKind::HashGridSphere: return e.joint.features;
        default: return e.grid.features;
    }
}

inline int encoder_levels(const EncoderSettings& e) {
    switch (e.kind) {
        case EncoderKind::HashSphere: return e.sphere.levels;
        case EncoderKind::HashGridSphere: return e.joint.levels;
        default: return e.grid.levels;
    }
}

inline std::uint64_t encoder_table_cap(const EncoderSettings& e) {
    switch (e.kind) {
        case EncoderKind::HashSphere: return e.sphere.hash.table_cap;
        case EncoderKind::HashGridSphere: return e.joint.hash.table_cap;
        default: return e.grid.table_cap;
    }
}

// Geodesic index tables the encoder needs (-1: none beyond the base solid).
inline int geodesic_tables_needed(const EncoderSettings& e) {
    switch (e.kind) {
        case EncoderKind::HashSphere: return sphere_dense_levels_needed(e.sphere);
        case EncoderKind::HashGridSphere: return joint_dense_dir_levels_needed(e.joint);
        default: return -1;
    }
}

inline bool uses_geodesic_grid(EncoderKind k) {
    return k == EncoderKind::HashSphere || k == EncoderKind::HashGridSphere;
}

template <typename S>
struct Model {
    EncoderSettings enc;
    MLPConfig mlp_cfg;
    LevelTables<S> tables;
    MLPParams<S> mlp;
    std::uint64_t seed = 0;
    std::uint32_t trained_steps = 0;
    std::shared_ptr<const GeodesicGrid> grid;  // runtime only, rebuilt on load

    int feature_dim() const { return sphenc::feature_dim(enc); }
};

template <typename S>
void model_encode(const Model<S>& m, Vec3 pos, Vec3 dir, std::span<S> out) {
    switch (m.enc.kind) {
        case EncoderKind::HashSphere:
            encode_sphere(dir, m.tables, m.enc.sphere, *m.grid, out);
            break;
        case EncoderKind::HashGridSphere:
            encode_joint(pos, dir, m.tables, m.enc.joint, *m.grid, out);
            break;
        case EncoderKind::Grid2dPolar: {
            auto p = polar_map(sanitize_direction(dir));
            encode_grid(p.data(), m.tables, m.enc.grid, out);
            break;
        }
        case EncoderKind::Grid3dCartesian: {
            auto p = cartesian_map(sanitize_direction(dir));
            encode_grid(p.data(), m.tables, m.enc.grid, out);
            break;
        }
    }
}

template <typename S>
void model_encode_backward(const Model<S>& m, Vec3 pos, Vec3 dir, std::span<const S> upstream,
                           LevelTables<S>& grads) {
    switch (m.enc.kind) {
        case EncoderKind::HashSphere:
            encode_sphere_backward_scatter(dir, upstream, m.enc.sphere, *m.grid, grads);
            break;
        case EncoderKind::HashGridSphere:
            encode_joint_backward_scatter(pos, dir, upstream, m.enc.joint, *m.grid, grads);
            break;
        case EncoderKind::Grid2dPolar: {
            auto p = polar_map(sanitize_direction(dir));
            encode_grid_backward_scatter(p.data(), upstream, m.enc.grid, grads);
            break;
        }
        case EncoderKind::Grid3dCartesian: {
            auto p = cartesian_map(sanitize_direction(dir));
            encode_grid_backward_scatter(p.data(), upstream, m.enc.grid, grads);
            break;
        }
    }
}

template <typename S>
LevelTables<S> zero_tables_like(const LevelTables<S>& t) {
    LevelTables<S> z(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) z[i].assign(t[i].size(), S(0));
    return z;
}

// Gradient storage shaped exactly like a model's trainable parameters.
template <typename S>
struct ModelGrads {
    LevelTables<S> tables;
    MLPParams<S> mlp;

    void zero() {
        for (auto& t : tables) std::fill(t.begin(), t.end(), S(0));
        for (auto& l : mlp.layers) {
            std::fill(l.w.begin(), l.w.end(), S(0));
            std::fill(l.b.begin(), l.b.end(), S(0));
        }
    }
};

template <typename S>
ModelGrads<S> make_grads(const Model<S>& m) {
    return {zero_tables_like(m.tables), mlp_zeros_like(m.mlp)};
}

// Fixed block order (tables level-major, then each layer's weights and bias):
// the optimizer, the L2 penalty, and the checkpoint all walk this order.
template <typename S>
std::vector<std::span<S>> param_blocks(LevelTables<S>& tables, MLPParams<S>& mlp) {
    std::vector<std::span<S>> blocks;
    blocks.reserve(tables.size() + mlp.layers.size() * 2);
    for (auto& t : tables) blocks.emplace_back(t);
    for (auto& l : mlp.layers) {
        blocks.emplace_back(l.w);
        blocks.emplace_back(l.b);
    }
    return blocks;
}

template <typename S>
std::vector<std::span<const S>> param_blocks_const(const LevelTables<S>& tables,
                                                   const MLPParams<S>& mlp) {
    std::vector<std::span<const S>> blocks;
    blocks.reserve(tables.size() + mlp.layers.size() * 2);
    for (const auto& t : tables) blocks.emplace_back(t);
    for (const auto& l : mlp.layers) {
        blocks.emplace_back(l.w);
        blocks.emplace_back(l.b);
    }
    return blocks;
}

struct MemoryFootprint {
    std::uint64_t encoding_bytes = 0;
    std::uint64_t mlp_bytes = 0;
    std::uint64_t index_table_bytes = 0;  // geodesic lookup structures, not learned

    std::uint64_t parameter_total() const { return encoding_bytes + mlp_bytes; }
};

template <typename S>
MemoryFootprint memory_footprint(const Model<S>& m) {
    MemoryFootprint f;
    f.encoding_bytes = 4 * table_param_count(m.tables);
    f.mlp_bytes = 4 * m.mlp.param_count();
    f.index_table_bytes = m.grid ? m.grid->index_table_bytes() : 0;
    return f;
}

// Builds tables (seed) and MLP (seed + 1), wiring the MLP input width to the
// encoder's feature dimension.
Model<float> make_model(const EncoderSettings& enc, MLPConfig mlp_cfg, std::uint64_t seed);

Model<double> to_double(const Model<float>& m);

}  // namespace sphenc
