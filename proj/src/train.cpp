#include "sphenc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "sphenc/sampling.hpp"

namespace sphenc {

namespace {

constexpr std::uint64_t kEvalSeedSalt = 0x45564131ull;
constexpr std::uint64_t kBandSeedSalt = 0x42414e44ull;
constexpr double kDeg = std::numbers::pi / 180.0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void fill_header(TrainReport& rep, const Model<float>& model, const TrainConfig& cfg) {
    rep.encoder = encoder_name(model.enc.kind);
    rep.seed = cfg.seed;
    rep.levels = encoder_levels(model.enc);
    rep.features = encoder_features(model.enc);
    rep.table_cap = encoder_table_cap(model.enc);
    rep.steps = cfg.steps;
    rep.batch = cfg.batch;
    rep.lr = cfg.lr;
    MemoryFootprint mem = memory_footprint(model);
    rep.enc_params = mem.encoding_bytes / 4;
    rep.mlp_params = mem.mlp_bytes / 4;
    rep.enc_bytes = mem.encoding_bytes;
    rep.mlp_bytes = mem.mlp_bytes;
    rep.index_table_bytes = mem.index_table_bytes;
    rep.band_rel_err.fill(std::nan(""));
}

void log_loss(std::ostream* os, int step, double loss) {
    if (!os) return;
    char buf[80];
    std::snprintf(buf, sizeof buf, "{\"step\":%d,\"loss\":%.17g}\n", step, loss);
    *os << buf;
}

struct Predictor {
    const Model<float>& model;
    std::vector<float> feat;

    explicit Predictor(const Model<float>& m) : model(m), feat(std::size_t(m.feature_dim())) {}

    void operator()(Vec3 pos, Vec3 dir, std::span<float> out) {
        model_encode(model, pos, dir, std::span<float>(feat));
        mlp_forward(std::span<const float>(feat), model.mlp, model.mlp_cfg, out);
    }
};

// One optimization sweep shared by both tasks. sample_fn fills (pos, dir,
// target) for one batch element; everything else is fixed plumbing.
template <typename SampleFn>
void run_steps(Model<float>& model, const TrainConfig& cfg, int channels, SampleFn&& sample_fn,
               TrainReport& rep, std::ostream* loss_log) {
    if (cfg.steps < 0 || cfg.batch < 1) throw config_error("training: bad steps/batch");
    if (model.mlp_cfg.output_width != channels)
        throw config_error("training: model output width does not match the task");
    if (model.mlp_cfg.input_width != model.feature_dim())
        throw config_error("training: mlp input width does not match the encoder");

    Rng rng(cfg.seed);
    ModelGrads<float> grads = make_grads(model);
    auto params = param_blocks(model.tables, model.mlp);
    auto grad_views = param_blocks_const(grads.tables, grads.mlp);

    std::uint64_t total = 0;
    for (const auto& b : params) total += b.size();
    Adam adam({.lr = cfg.lr}, total);

    const int dim = model.feature_dim();
    std::vector<float> feat(static_cast<std::size_t>(dim)), dfeat(static_cast<std::size_t>(dim));
    std::vector<float> pred(static_cast<std::size_t>(channels));
    std::vector<float> dpred(static_cast<std::size_t>(channels));
    std::vector<float> target(static_cast<std::size_t>(channels));
    MLPCache<float> cache;
    const double grad_scale = 1.0 / (double(cfg.batch) * channels);

    for (int step = 0; step < cfg.steps; ++step) {
        grads.zero();
        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            Vec3 pos, dir;
            sample_fn(rng, pos, dir, target.data());
            model_encode(model, pos, dir, std::span<float>(feat));
            mlp_forward(std::span<const float>(feat), model.mlp, model.mlp_cfg,
                        std::span<float>(pred), &cache);
            loss_sum += relative_l2_parts(std::span<const float>(pred),
                                          std::span<const float>(target), grad_scale,
                                          std::span<float>(dpred));
            mlp_backward(std::span<const float>(dpred), model.mlp, model.mlp_cfg, cache, grads.mlp,
                         std::span<float>(dfeat));
            model_encode_backward(model, pos, dir, std::span<const float>(dfeat), grads.tables);
        }
        double loss = loss_sum * grad_scale;
        if (cfg.l2_lambda != 0.0) {
            auto pviews = param_blocks_const(model.tables, model.mlp);
            auto gblocks = param_blocks(grads.tables, grads.mlp);
            for (std::size_t i = 0; i < pviews.size(); ++i)
                loss += l2_penalty_accumulate(pviews[i], cfg.l2_lambda, gblocks[i]);
        }
        if (!std::isfinite(loss))
            throw config_error("training diverged: non-finite loss at step " + std::to_string(step));
        adam.step(params, grad_views);
        rep.loss_curve.push_back(loss);
        log_loss(loss_log, step, loss);
    }
    model.trained_steps += std::uint32_t(cfg.steps);
}

}  // namespace

TrainReport train_envmap(Model<float>& model, const EnvMap& map, const TrainConfig& cfg,
                         std::ostream* loss_log) {
    auto t0 = std::chrono::steady_clock::now();
    TrainReport rep;
    fill_header(rep, model, cfg);
    rep.initial_rel_l2 = evaluate_envmap(model, map, cfg.seed ^ kEvalSeedSalt).rel_l2;

    run_steps(model, cfg, 3,
              [&map](Rng& rng, Vec3& pos, Vec3& dir, float* target) {
                  pos = {0.0, 0.0, 0.0};
                  dir = sample_uniform_sphere(rng);
                  auto t = envmap_lookup(map, dir);
                  target[0] = t[0];
                  target[1] = t[1];
                  target[2] = t[2];
              },
              rep, loss_log);

    EnvmapEval ev = evaluate_envmap(model, map, cfg.seed ^ kEvalSeedSalt);
    rep.final_rel_l2 = ev.rel_l2;
    rep.final_psnr = ev.psnr;
    rep.band_rel_err = latitude_profile(model, map, cfg.band_samples, cfg.seed ^ kBandSeedSalt);
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

EnvmapEval evaluate_envmap(const Model<float>& model, const EnvMap& map, std::uint64_t seed) {
    Rng rng(seed);
    Predictor predict(model);
    const std::size_t n = std::size_t(map.width) * std::size_t(map.height);

    EnvmapEval ev;
    ev.pred.resize(n * 3);
    ev.ref.resize(n * 3);
    ev.weight.resize(n);

    std::vector<float> pred(3);
    double wsum = 0.0, rel_sum = 0.0, mse_sum = 0.0, peak = 0.0;
    std::size_t s = 0;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x, ++s) {
            double u = (x + rng.next_double()) / map.width;
            double v = (y + rng.next_double()) / map.height;
            Vec3 d = uv_to_dir(u, v);
            auto ref = envmap_lookup(map, d);
            predict({0.0, 0.0, 0.0}, d, std::span<float>(pred));

            double w = std::sin(std::numbers::pi * v);  // solid-angle weight
            ev.weight[s] = w;
            for (int c = 0; c < 3; ++c) {
                ev.pred[3 * s + std::size_t(c)] = pred[std::size_t(c)];
                ev.ref[3 * s + std::size_t(c)] = ref[std::size_t(c)];
            }
            rel_sum += w * relative_l2_parts(std::span<const float>(pred),
                                             std::span<const float>(ref.data(), 3), 0.0, {}) / 3.0;
            for (int c = 0; c < 3; ++c) {
                double yp = std::log1p(std::max(0.0f, pred[std::size_t(c)]));
                double yr = std::log1p(std::max(0.0f, ref[std::size_t(c)]));
                peak = std::max(peak, yr);
                mse_sum += w * (yp - yr) * (yp - yr) / 3.0;
            }
            wsum += w;
        }

    ev.rel_l2 = rel_sum / wsum;
    double mse = mse_sum / wsum;
    ev.psnr = mse > 0.0 ? 10.0 * std::log10(peak * peak / mse)
                        : std::numeric_limits<double>::infinity();
    return ev;
}

std::array<double, 18> latitude_profile(const Model<float>& model, const EnvMap& map,
                                        int samples_per_band, std::uint64_t seed) {
    if (samples_per_band < 1) throw config_error("latitude_profile: need samples");
    Rng rng(seed);
    Predictor predict(model);
    std::vector<float> pred(3);

    std::array<double, 18> bands{};
    for (int j = 0; j < 18; ++j) {
        double lo = j * 10.0 * kDeg, hi = (j + 1) * 10.0 * kDeg;
        double sum = 0.0;
        for (int s = 0; s < samples_per_band; ++s) {
            Vec3 d = sample_latitude_band(rng, lo, hi);
            auto ref = envmap_lookup(map, d);
            predict({0.0, 0.0, 0.0}, d, std::span<float>(pred));
            double e = 0.0;
            for (int c = 0; c < 3; ++c)
                e += std::abs(double(pred[std::size_t(c)]) - ref[std::size_t(c)]) /
                     (double(ref[std::size_t(c)]) + 0.01);
            sum += e / 3.0;
        }
        bands[std::size_t(j)] = sum / samples_per_band;
    }
    return bands;
}

double polar_mid_ratio(const std::array<double, 18>& bands) {
    double polar = std::max(bands[0], bands[17]);
    std::array<double, 8> mid;  // colatitude 50..130 degrees
    std::copy(bands.begin() + 5, bands.begin() + 13, mid.begin());
    std::sort(mid.begin(), mid.end());
    double median = 0.5 * (mid[3] + mid[4]);
    if (median <= 0.0) return std::numeric_limits<double>::infinity();
    return polar / median;
}

const std::vector<Vec3>& joint_train_directions() {
    static const std::vector<Vec3> dirs = fibonacci_sphere(256);
    return dirs;
}

const std::vector<Vec3>& joint_novel_directions() {
    static const std::vector<Vec3> dirs = [] {
        auto novel = rotate_each(joint_train_directions(), 1.8 * kDeg);
        double gap = min_angular_gap(novel, joint_train_directions());
        if (gap <= 0.5 * kDeg)
            throw geometry_error("held-out directions too close to the training set");
        return novel;
    }();
    return dirs;
}

TrainReport train_joint(Model<float>& model, const SyntheticField5D& field, const TrainConfig& cfg,
                        std::ostream* loss_log) {
    auto t0 = std::chrono::steady_clock::now();
    TrainReport rep;
    fill_header(rep, model, cfg);
    rep.initial_rel_l2 =
        evaluate_joint(model, field, cfg.joint_eval_samples, cfg.seed ^ kEvalSeedSalt).train_rel_l2;

    const auto& dirs = joint_train_directions();
    run_steps(model, cfg, 1,
              [&](Rng& rng, Vec3& pos, Vec3& dir, float* target) {
                  pos = {rng.next_double(), rng.next_double(), rng.next_double()};
                  dir = dirs[std::size_t(rng.next_below(dirs.size()))];
                  target[0] = float(field.normalized(pos, dir));
              },
              rep, loss_log);

    JointEval ev = evaluate_joint(model, field, cfg.joint_eval_samples, cfg.seed ^ kEvalSeedSalt);
    rep.train_rel_l2 = ev.train_rel_l2;
    rep.novel_rel_l2 = ev.novel_rel_l2;
    rep.final_rel_l2 = ev.train_rel_l2;
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

JointEval evaluate_joint(const Model<float>& model, const SyntheticField5D& field, int samples,
                         std::uint64_t seed) {
    if (samples < 1) throw config_error("evaluate_joint: need samples");
    Rng rng(seed);
    Predictor predict(model);
    const auto& train_dirs = joint_train_directions();
    const auto& novel_dirs = joint_novel_directions();

    std::vector<float> pred(1);
    float target = 0.0f;
    double train_sum = 0.0, novel_sum = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vec3 pos = {rng.next_double(), rng.next_double(), rng.next_double()};
        std::size_t k = std::size_t(s) % train_dirs.size();

        target = float(field.normalized(pos, train_dirs[k]));
        predict(pos, train_dirs[k], std::span<float>(pred));
        train_sum += relative_l2_parts(std::span<const float>(pred),
                                       std::span<const float>(&target, 1), 0.0, {});

        target = float(field.normalized(pos, novel_dirs[k]));
        predict(pos, novel_dirs[k], std::span<float>(pred));
        novel_sum += relative_l2_parts(std::span<const float>(pred),
                                       std::span<const float>(&target, 1), 0.0, {});
    }
    return {train_sum / samples, novel_sum / samples};
}

}  // namespace sphenc
