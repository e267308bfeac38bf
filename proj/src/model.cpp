#include "sphenc/model.hpp"

namespace sphenc {

std::string encoder_name(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::HashSphere: return "hashsphere";
        case EncoderKind::HashGridSphere: return "hashgridsphere";
        case EncoderKind::Grid2dPolar: return "grid2d";
        case EncoderKind::Grid3dCartesian: return "grid3d";
    }
    throw config_error("unknown encoder kind");
}

EncoderKind encoder_from_name(const std::string& name) {
    if (name == "hashsphere") return EncoderKind::HashSphere;
    if (name == "hashgridsphere") return EncoderKind::HashGridSphere;
    if (name == "grid2d") return EncoderKind::Grid2dPolar;
    if (name == "grid3d") return EncoderKind::Grid3dCartesian;
    throw config_error("unknown encoder name: " + name);
}

Model<float> make_model(const EncoderSettings& enc, MLPConfig mlp_cfg, std::uint64_t seed) {
    validate(enc);
    mlp_cfg.input_width = feature_dim(enc);
    validate(mlp_cfg);

    Model<float> m;
    m.enc = enc;
    m.mlp_cfg = mlp_cfg;
    m.seed = seed;
    m.tables = init_tables(level_rows(enc), encoder_features(enc), seed);
    m.mlp = init_mlp(mlp_cfg, seed + 1);
    if (uses_geodesic_grid(enc.kind))
        m.grid = std::make_shared<GeodesicGrid>(geodesic_tables_needed(enc));
    return m;
}

Model<double> to_double(const Model<float>& m) {
    Model<double> d;
    d.enc = m.enc;
    d.mlp_cfg = m.mlp_cfg;
    d.seed = m.seed;
    d.trained_steps = m.trained_steps;
    d.grid = m.grid;
    d.tables.resize(m.tables.size());
    for (std::size_t l = 0; l < m.tables.size(); ++l)
        d.tables[l].assign(m.tables[l].begin(), m.tables[l].end());
    d.mlp.layers.resize(m.mlp.layers.size());
    for (std::size_t i = 0; i < m.mlp.layers.size(); ++i) {
        const auto& src = m.mlp.layers[i];
        auto& dst = d.mlp.layers[i];
        dst.in = src.in;
        dst.out = src.out;
        dst.w.assign(src.w.begin(), src.w.end());
        dst.b.assign(src.b.begin(), src.b.end());
    }
    return d;
}

}  // namespace sphenc
