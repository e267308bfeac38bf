#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sphenc/model.hpp"
#include "sphenc/sampling.hpp"

namespace sphenc {

// Central-difference verification of the analytic gradients through the full
// pipeline. Each probe fixes a random input (x, d) and projection u, defines
// J(theta) = u . mlp(encode(x, d)), and compares backprop against
// (J(theta + h e_k) - J(theta - h e_k)) / 2h for every parameter the sample
// touches: all MLP weights and biases plus the table rows the traversal
// visited. Everything runs in double so h can be small without the
// differences drowning in rounding noise.
//
// The two gradients are compared per probe as vectors: the largest
// component-wise deviation, divided by the largest gradient magnitude the
// probe produced. Central differences cannot resolve a component below
// eps_machine * |J| / h no matter how h is chosen, so normalizing each
// component by its own (possibly vanishing) magnitude would report that
// rounding floor instead of the quality of the backward pass.

struct GradCheckResult {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    int probes = 0;
    std::uint64_t params_checked = 0;
};

namespace detail {

template <typename S>
GradientBuffer<S> sparse_table_backward(const Model<S>& m, Vec3 pos, Vec3 dir,
                                        std::span<const S> upstream) {
    switch (m.enc.kind) {
        case EncoderKind::HashSphere:
            return encode_sphere_backward(dir, upstream, m.enc.sphere, *m.grid);
        case EncoderKind::HashGridSphere:
            return encode_joint_backward(pos, dir, upstream, m.enc.joint, *m.grid);
        case EncoderKind::Grid2dPolar: {
            auto p = polar_map(sanitize_direction(dir));
            return encode_grid_backward(p.data(), upstream, m.enc.grid);
        }
        default: {
            auto p = cartesian_map(sanitize_direction(dir));
            return encode_grid_backward(p.data(), upstream, m.enc.grid);
        }
    }
}

}  // namespace detail

inline GradCheckResult gradient_check(const Model<float>& model32, int probes, double h,
                                      std::uint64_t seed) {
    if (probes < 1) throw config_error("gradient check: need at least one probe");
    if (!(h > 0.0)) throw config_error("gradient check: step must be positive");

    Model<double> model = to_double(model32);
    Rng rng(seed);
    GradCheckResult res;
    res.probes = probes;

    const int dim = model.feature_dim();
    const int out_w = model.mlp_cfg.output_width;
    const int F = encoder_features(model.enc);
    const Vec3 bmin = model.enc.joint.box_min, bmax = model.enc.joint.box_max;

    std::vector<double> feat(static_cast<std::size_t>(dim)), dfeat(static_cast<std::size_t>(dim));
    std::vector<double> pred(static_cast<std::size_t>(out_w)), u(static_cast<std::size_t>(out_w));
    MLPCache<double> cache;

    Vec3 x, d;
    auto objective = [&]() {
        model_encode(model, x, d, std::span<double>(feat));
        mlp_forward(std::span<const double>(feat), model.mlp, model.mlp_cfg,
                    std::span<double>(pred));
        double j = 0.0;
        for (int i = 0; i < out_w; ++i) j += u[std::size_t(i)] * pred[std::size_t(i)];
        return j;
    };
    double probe_err = 0.0, probe_scale = 0.0;
    auto check_param = [&](double* param, double analytic) {
        double orig = *param;
        *param = orig + h;
        double jp = objective();
        *param = orig - h;
        double jm = objective();
        *param = orig;
        double numeric = (jp - jm) / (2.0 * h);
        probe_err = std::max(probe_err, std::abs(analytic - numeric));
        probe_scale = std::max({probe_scale, std::abs(analytic), std::abs(numeric)});
        ++res.params_checked;
    };

    for (int p = 0; p < probes; ++p) {
        probe_err = 0.0;
        probe_scale = 0.0;
        x = {rng.uniform(bmin.x, bmax.x), rng.uniform(bmin.y, bmax.y), rng.uniform(bmin.z, bmax.z)};
        d = sample_uniform_sphere(rng);
        for (auto& ui : u) ui = rng.uniform(-1.0, 1.0);

        model_encode(model, x, d, std::span<double>(feat));
        mlp_forward(std::span<const double>(feat), model.mlp, model.mlp_cfg,
                    std::span<double>(pred), &cache);
        MLPParams<double> mlp_grads = mlp_zeros_like(model.mlp);
        mlp_backward(std::span<const double>(u), model.mlp, model.mlp_cfg, cache, mlp_grads,
                     std::span<double>(dfeat));
        GradientBuffer<double> buf =
            detail::sparse_table_backward(model, x, d, std::span<const double>(dfeat));

        for (std::size_t l = 0; l < buf.levels.size(); ++l) {
            const auto& lv = buf.levels[l];
            for (std::size_t e = 0; e < lv.rows.size(); ++e)
                for (int f = 0; f < F; ++f)
                    check_param(model.tables[l].data() + std::uint64_t(lv.rows[e]) * F + f,
                                lv.grads[e * std::size_t(F) + std::size_t(f)]);
        }
        for (std::size_t i = 0; i < model.mlp.layers.size(); ++i) {
            auto& layer = model.mlp.layers[i];
            const auto& g = mlp_grads.layers[i];
            for (std::size_t k = 0; k < layer.w.size(); ++k) check_param(&layer.w[k], g.w[k]);
            for (std::size_t k = 0; k < layer.b.size(); ++k) check_param(&layer.b[k], g.b[k]);
        }
        res.max_abs_err = std::max(res.max_abs_err, probe_err);
        res.max_rel_err = std::max(res.max_rel_err, probe_err / std::max(probe_scale, 1e-8));
    }
    return res;
}

}  // namespace sphenc
