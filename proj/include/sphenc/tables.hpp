#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "sphenc/error.hpp"
#include "sphenc/rng.hpp"

namespace sphenc {

// One learned feature table per level, row-major [row * F + f]. Production
// code instantiates S = float; gradient checks instantiate S = double.
template <typename S>
using LevelTables = std::vector<std::vector<S>>;

inline std::vector<float> init_table(std::uint64_t rows, int features, Rng& rng) {
    std::vector<float> t(rows * std::uint64_t(features));
    for (auto& v : t) v = float(rng.uniform(-1e-4, 1e-4));
    return t;
}

// i.i.d. uniform [-1e-4, 1e-4], level-major, so a (seed, shape) pair fully
// determines every entry.
inline LevelTables<float> init_tables(const std::vector<std::uint64_t>& rows_per_level,
                                      int features, std::uint64_t seed) {
    Rng rng(seed);
    LevelTables<float> tables;
    tables.reserve(rows_per_level.size());
    for (std::uint64_t rows : rows_per_level) tables.push_back(init_table(rows, features, rng));
    return tables;
}

template <typename S>
std::uint64_t table_param_count(const LevelTables<S>& tables) {
    std::uint64_t n = 0;
    for (const auto& t : tables) n += t.size();
    return n;
}

template <typename S>
void check_table_shapes(const LevelTables<S>& tables, const std::vector<std::uint64_t>& rows_per_level,
                        int features) {
    if (tables.size() != rows_per_level.size())
        throw config_error("parameter tables: wrong level count");
    for (std::size_t l = 0; l < tables.size(); ++l)
        if (tables[l].size() != rows_per_level[l] * std::uint64_t(features))
            throw config_error("parameter tables: size mismatch at level " + std::to_string(l));
}

// Sparse per-level gradients from a single sample: (row, F-vector) entries in
// the order they were touched. Colliding rows are kept separate until
// canonicalize() merges them, summing in encounter order so that a merge of
// per-chunk buffers (in chunk order) reproduces the sequential sweep.
template <typename S>
struct GradientBuffer {
    struct Level {
        std::vector<std::uint32_t> rows;
        std::vector<S> grads;  // rows.size() * features
    };

    int features = 0;
    std::vector<Level> levels;

    GradientBuffer() = default;
    GradientBuffer(std::size_t num_levels, int f) : features(f), levels(num_levels) {}

    void add(std::size_t level, std::uint32_t row, const S* g) {
        auto& lv = levels[level];
        lv.rows.push_back(row);
        lv.grads.insert(lv.grads.end(), g, g + features);
    }

    std::size_t entry_count(std::size_t level) const { return levels[level].rows.size(); }

    // Stable-sorts entries by row and sums duplicates, preserving insertion
    // order within a row.
    void canonicalize() {
        for (auto& lv : levels) {
            std::size_t n = lv.rows.size();
            if (n < 2) continue;
            std::vector<std::uint32_t> order(n);
            std::iota(order.begin(), order.end(), 0u);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return lv.rows[a] < lv.rows[b]; });

            std::vector<std::uint32_t> rows;
            std::vector<S> grads;
            rows.reserve(n);
            grads.reserve(lv.grads.size());
            for (std::uint32_t idx : order) {
                if (!rows.empty() && rows.back() == lv.rows[idx]) {
                    S* dst = grads.data() + grads.size() - features;
                    const S* src = lv.grads.data() + std::size_t(idx) * features;
                    for (int f = 0; f < features; ++f) dst[f] += src[f];
                } else {
                    rows.push_back(lv.rows[idx]);
                    const S* src = lv.grads.data() + std::size_t(idx) * features;
                    grads.insert(grads.end(), src, src + features);
                }
            }
            lv.rows = std::move(rows);
            lv.grads = std::move(grads);
        }
    }

    void merge_from(const GradientBuffer& other) {
        if (levels.empty()) {
            features = other.features;
            levels.resize(other.levels.size());
        }
        for (std::size_t l = 0; l < other.levels.size(); ++l) {
            const auto& src = other.levels[l];
            auto& dst = levels[l];
            dst.rows.insert(dst.rows.end(), src.rows.begin(), src.rows.end());
            dst.grads.insert(dst.grads.end(), src.grads.begin(), src.grads.end());
        }
    }

    // Adds the entries into dense table-shaped gradient arrays.
    void scatter_into(LevelTables<S>& dense) const {
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const auto& lv = levels[l];
            for (std::size_t e = 0; e < lv.rows.size(); ++e) {
                S* dst = dense[l].data() + std::uint64_t(lv.rows[e]) * features;
                const S* src = lv.grads.data() + e * features;
                for (int f = 0; f < features; ++f) dst[f] += src[f];
            }
        }
    }
};

}  // namespace sphenc
