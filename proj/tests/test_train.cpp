#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sphenc/envmap.hpp"
#include "sphenc/error.hpp"
#include "sphenc/field5d.hpp"
#include "sphenc/model.hpp"
#include "sphenc/sampling.hpp"
#include "sphenc/train.hpp"

using namespace sphenc;

namespace {

Model<float> small_sphere_model(std::uint64_t seed) {
    EncoderSettings enc;
    enc.kind = EncoderKind::HashSphere;
    enc.sphere.levels = 4;
    enc.sphere.features = 2;
    MLPConfig mlp;
    mlp.hidden_layers = 2;
    mlp.hidden_width = 16;
    mlp.output_width = 3;
    mlp.hidden_activation = Activation::Identity;
    mlp.output_activation = OutputActivation::Exponential;
    return make_model(enc, mlp, seed);
}

TrainConfig quick_cfg(int steps, int batch, double lr) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.batch = batch;
    cfg.lr = lr;
    cfg.band_samples = 128;
    return cfg;
}

}  // namespace

TEST_CASE("training twice from the same seed is bitwise identical") {
    EnvMap map = make_procedural_map(ProceduralTarget::Gradient, 32, 16, 3);
    Model<float> m1 = small_sphere_model(21);
    Model<float> m2 = small_sphere_model(21);
    TrainConfig cfg = quick_cfg(12, 256, 0.01);

    TrainReport r1 = train_envmap(m1, map, cfg);
    TrainReport r2 = train_envmap(m2, map, cfg);

    REQUIRE(r1.loss_curve.size() == 12);
    for (std::size_t i = 0; i < r1.loss_curve.size(); ++i)
        CHECK(r1.loss_curve[i] == r2.loss_curve[i]);
    CHECK(r1.final_rel_l2 == r2.final_rel_l2);
    CHECK(r1.final_psnr == r2.final_psnr);
    for (std::size_t l = 0; l < m1.tables.size(); ++l) CHECK(m1.tables[l] == m2.tables[l]);
    for (std::size_t l = 0; l < m1.mlp.layers.size(); ++l) {
        CHECK(m1.mlp.layers[l].w == m2.mlp.layers[l].w);
        CHECK(m1.mlp.layers[l].b == m2.mlp.layers[l].b);
    }
    CHECK(m1.trained_steps == 12);

    // A different training seed gives a different trajectory.
    TrainConfig other = cfg;
    other.seed = 2;
    Model<float> m3 = small_sphere_model(21);
    TrainReport r3 = train_envmap(m3, map, other);
    CHECK(r3.loss_curve.back() != r1.loss_curve.back());
}

TEST_CASE("a constant map is fit to near-zero loss within a few steps") {
    EnvMap map = make_procedural_map(ProceduralTarget::Constant, 16, 8, 0);
    Model<float> m = small_sphere_model(1);
    TrainConfig cfg = quick_cfg(48, 1024, 0.01);
    TrainReport rep = train_envmap(m, map, cfg);
    CHECK(rep.loss_curve.back() < 1e-4);
    CHECK(rep.final_rel_l2 < 1e-4);
}

TEST_CASE("training reduces the loss on a smooth gradient map") {
    EnvMap map = make_procedural_map(ProceduralTarget::Gradient, 64, 32, 0);
    Model<float> m = small_sphere_model(5);
    TrainConfig cfg = quick_cfg(96, 512, 0.01);
    TrainReport rep = train_envmap(m, map, cfg);
    CHECK(rep.final_rel_l2 < 0.5 * rep.initial_rel_l2);
    CHECK(rep.loss_curve.back() < 0.5 * rep.loss_curve.front());
    CHECK(std::isfinite(rep.final_psnr));
    CHECK(rep.final_psnr > 0.0);
}

TEST_CASE("the loss log stream gets one json line per step") {
    EnvMap map = make_procedural_map(ProceduralTarget::Gradient, 16, 8, 0);
    Model<float> m = small_sphere_model(6);
    TrainConfig cfg = quick_cfg(5, 128, 0.01);
    std::ostringstream log;
    train_envmap(m, map, cfg, &log);
    std::istringstream is(log.str());
    std::string line;
    int lines = 0;
    while (std::getline(is, line)) {
        CHECK(line.find("{\"step\":") == 0);
        CHECK(line.find("\"loss\":") != std::string::npos);
        CHECK(line.back() == '}');
        ++lines;
    }
    CHECK(lines == 5);
}

TEST_CASE("report carries the model and config metadata") {
    EnvMap map = make_procedural_map(ProceduralTarget::Gradient, 16, 8, 0);
    Model<float> m = small_sphere_model(7);
    TrainConfig cfg = quick_cfg(3, 64, 0.015);
    cfg.seed = 9;
    TrainReport rep = train_envmap(m, map, cfg);
    CHECK(rep.encoder == "hashsphere");
    CHECK(rep.seed == 9);
    CHECK(rep.levels == 4);
    CHECK(rep.features == 2);
    CHECK(rep.table_cap == (1u << 14));
    CHECK(rep.steps == 3);
    CHECK(rep.batch == 64);
    CHECK(rep.lr == 0.015);
    CHECK(rep.enc_params == table_param_count(m.tables));
    CHECK(rep.mlp_params == m.mlp.param_count());
    CHECK(rep.enc_bytes == 4 * rep.enc_params);
    CHECK(rep.mlp_bytes == 4 * rep.mlp_params);
    CHECK(rep.index_table_bytes == m.grid->index_table_bytes());
    CHECK(rep.wall_seconds >= 0.0);
}

TEST_CASE("memory footprint matches the closed-form row counts") {
    // Sphere, L=8, F=2, T=2^14: rows = sum over levels of min(10*4^l+2, 2^14).
    EncoderSettings enc;
    enc.kind = EncoderKind::HashSphere;
    enc.sphere.levels = 8;
    enc.sphere.features = 2;
    MLPConfig mlp;  // 16 -> 16 -> 16 -> 3
    Model<float> m = make_model(enc, mlp, 1);

    std::uint64_t rows = 0;
    for (int l = 0; l < 8; ++l) {
        std::uint64_t n = 10ull * (1ull << (2 * l)) + 2;
        rows += n <= (1u << 14) ? n : (1u << 14);
    }
    CHECK(rows == 46430);  // 12+42+162+642+2562+10242+16384+16384
    MemoryFootprint f = memory_footprint(m);
    CHECK(f.encoding_bytes == 4 * rows * 2);
    CHECK(f.encoding_bytes == 371440);
    CHECK(table_param_count(m.tables) == rows * 2);

    // MLP widths 16 -> 16 -> 16 -> 3: (16*16+16) + (16*16+16) + (16*3+3).
    CHECK(m.mlp.param_count() == 272 + 272 + 51);
    CHECK(f.mlp_bytes == 4 * 595);
}

TEST_CASE("envmap evaluation metrics recompute from the dumped arrays") {
    EnvMap map = make_procedural_map(ProceduralTarget::IsotropicNoise, 32, 16, 11);
    Model<float> m = small_sphere_model(8);
    EnvmapEval ev = evaluate_envmap(m, map, 17);

    std::size_t n = std::size_t(map.width) * std::size_t(map.height);
    REQUIRE(ev.pred.size() == n * 3);
    REQUIRE(ev.ref.size() == n * 3);
    REQUIRE(ev.weight.size() == n);

    double wsum = 0.0, lsum = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double part = 0.0;
        for (int c = 0; c < 3; ++c) {
            double p = double(ev.pred[s * 3 + std::size_t(c)]);
            double r = double(ev.ref[s * 3 + std::size_t(c)]);
            part += (p - r) * (p - r) / (p * p + 0.01);
        }
        lsum += ev.weight[s] * part / 3.0;
        wsum += ev.weight[s];
    }
    CHECK(ev.rel_l2 == doctest::Approx(lsum / wsum).epsilon(1e-6));

    double peak = 0.0;
    for (float r : ev.ref) peak = std::max(peak, std::log1p(double(r)));
    double msum = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double part = 0.0;
        for (int c = 0; c < 3; ++c) {
            double p = std::log1p(std::max(0.0, double(ev.pred[s * 3 + std::size_t(c)])));
            double r = std::log1p(double(ev.ref[s * 3 + std::size_t(c)]));
            part += (p - r) * (p - r);
        }
        msum += ev.weight[s] * part / 3.0;
    }
    double mse = msum / wsum;
    double psnr = 10.0 * std::log10(peak * peak / mse);
    CHECK(ev.psnr == doctest::Approx(psnr).epsilon(1e-6));

    // Same seed, same numbers; different seed jitters differently.
    EnvmapEval ev2 = evaluate_envmap(m, map, 17);
    CHECK(ev2.rel_l2 == ev.rel_l2);
    EnvmapEval ev3 = evaluate_envmap(m, map, 18);
    CHECK(ev3.rel_l2 != ev.rel_l2);
}

TEST_CASE("latitude profile and polar ratio") {
    EnvMap map = make_procedural_map(ProceduralTarget::Gradient, 32, 16, 0);
    Model<float> m = small_sphere_model(9);
    std::array<double, 18> bands = latitude_profile(m, map, 64, 5);
    for (double b : bands) {
        CHECK(std::isfinite(b));
        CHECK(b >= 0.0);
    }
    std::array<double, 18> again = latitude_profile(m, map, 64, 5);
    CHECK(bands == again);

    std::array<double, 18> flat{};
    flat.fill(0.5);
    CHECK(polar_mid_ratio(flat) == doctest::Approx(1.0).epsilon(1e-12));
    flat[0] = 2.0;
    CHECK(polar_mid_ratio(flat) == doctest::Approx(4.0).epsilon(1e-12));
    flat[17] = 3.0;
    CHECK(polar_mid_ratio(flat) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("joint training: fixed directions, determinism, evaluation") {
    const std::vector<Vec3>& train_dirs = joint_train_directions();
    const std::vector<Vec3>& novel_dirs = joint_novel_directions();
    REQUIRE(train_dirs.size() == 256);
    REQUIRE(novel_dirs.size() == 256);
    const double deg = std::numbers::pi / 180.0;
    CHECK(min_angular_gap(novel_dirs, train_dirs) > 0.5 * deg);
    for (std::size_t i = 0; i < 256; ++i)
        CHECK(angle_between(train_dirs[i], novel_dirs[i]) == doctest::Approx(1.8 * deg).epsilon(1e-9));

    EncoderSettings enc;
    enc.kind = EncoderKind::HashGridSphere;
    enc.joint.levels = 4;
    enc.joint.dir_levels_cap = 1;
    enc.joint.features = 2;
    enc.joint.base_resolution = 4;
    MLPConfig mlp;
    mlp.hidden_layers = 2;
    mlp.hidden_width = 16;
    mlp.output_width = 1;
    mlp.hidden_activation = Activation::LeakyReLU;
    mlp.output_activation = OutputActivation::Sigmoid;

    SyntheticField5D field = SyntheticField5D::make(3, 31);
    TrainConfig cfg;
    cfg.steps = 24;
    cfg.batch = 256;
    cfg.lr = 0.005;
    cfg.joint_eval_samples = 512;

    Model<float> m1 = make_model(enc, mlp, 41);
    Model<float> m2 = make_model(enc, mlp, 41);
    TrainReport r1 = train_joint(m1, field, cfg);
    TrainReport r2 = train_joint(m2, field, cfg);
    CHECK(r1.loss_curve == r2.loss_curve);
    CHECK(r1.train_rel_l2 == r2.train_rel_l2);
    CHECK(r1.novel_rel_l2 == r2.novel_rel_l2);
    CHECK(std::isfinite(r1.train_rel_l2));
    CHECK(std::isfinite(r1.novel_rel_l2));
    CHECK(r1.train_rel_l2 >= 0.0);
    CHECK(r1.novel_rel_l2 >= 0.0);
    CHECK(r1.encoder == "hashgridsphere");
    CHECK(r1.final_rel_l2 == r1.train_rel_l2);

    JointEval ev = evaluate_joint(m1, field, 512, cfg.seed);
    JointEval ev2 = evaluate_joint(m1, field, 512, cfg.seed);
    CHECK(ev.train_rel_l2 == ev2.train_rel_l2);
    CHECK(ev.novel_rel_l2 == ev2.novel_rel_l2);
}

TEST_CASE("training validates the model head and batch settings") {
    EnvMap map = make_procedural_map(ProceduralTarget::Constant, 8, 4, 0);

    EncoderSettings enc;
    enc.kind = EncoderKind::HashSphere;
    enc.sphere.levels = 2;
    MLPConfig mlp;
    mlp.output_width = 1;  // envmap fitting needs 3 channels
    Model<float> bad = make_model(enc, mlp, 1);
    TrainConfig cfg = quick_cfg(1, 8, 0.01);
    CHECK_THROWS_AS(train_envmap(bad, map, cfg), config_error);

    mlp.output_width = 3;
    Model<float> good = make_model(enc, mlp, 1);
    TrainConfig zero_steps = quick_cfg(0, 8, 0.01);
    TrainReport noop = train_envmap(good, map, zero_steps);  // eval-only pass
    CHECK(noop.loss_curve.empty());
    CHECK(good.trained_steps == 0);
    TrainConfig neg_steps = quick_cfg(-1, 8, 0.01);
    CHECK_THROWS_AS(train_envmap(good, map, neg_steps), config_error);
    TrainConfig zero_batch = quick_cfg(1, 0, 0.01);
    CHECK_THROWS_AS(train_envmap(good, map, zero_batch), config_error);

    SyntheticField5D field = SyntheticField5D::make(2, 1);
    EncoderSettings jenc;
    jenc.kind = EncoderKind::HashGridSphere;
    jenc.joint.levels = 2;
    jenc.joint.base_resolution = 2;
    jenc.joint.dir_levels_cap = 0;
    MLPConfig wide;
    wide.output_width = 3;  // joint fitting needs a single channel
    Model<float> bad_joint = make_model(jenc, wide, 1);
    CHECK_THROWS_AS(train_joint(bad_joint, field, cfg), config_error);
}

TEST_CASE("grid baselines train through the same loop") {
    EnvMap map = make_procedural_map(ProceduralTarget::Gradient, 32, 16, 0);
    for (EncoderKind kind : {EncoderKind::Grid2dPolar, EncoderKind::Grid3dCartesian}) {
        EncoderSettings enc;
        enc.kind = kind;
        enc.grid.dims = kind == EncoderKind::Grid2dPolar ? 2 : 3;
        enc.grid.levels = 4;
        MLPConfig mlp;
        mlp.hidden_activation = Activation::Identity;
        mlp.output_activation = OutputActivation::Exponential;
        Model<float> m = make_model(enc, mlp, 3);
        TrainConfig cfg = quick_cfg(48, 256, 0.01);
        TrainReport rep = train_envmap(m, map, cfg);
        CHECK(rep.final_rel_l2 < rep.initial_rel_l2);
        CHECK(rep.encoder == (kind == EncoderKind::Grid2dPolar ? "grid2d" : "grid3d"));
    }
}
