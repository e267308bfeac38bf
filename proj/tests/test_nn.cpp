#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sphenc/error.hpp"
#include "sphenc/nn.hpp"
#include "sphenc/rng.hpp"

using namespace sphenc;

namespace {

MLPParams<double> to_double_params(const MLPParams<float>& p) {
    MLPParams<double> q;
    q.layers.resize(p.layers.size());
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        q.layers[i].in = p.layers[i].in;
        q.layers[i].out = p.layers[i].out;
        q.layers[i].w.assign(p.layers[i].w.begin(), p.layers[i].w.end());
        q.layers[i].b.assign(p.layers[i].b.begin(), p.layers[i].b.end());
    }
    return q;
}

}  // namespace

TEST_CASE("an identity-activation network is the collapsed affine map") {
    MLPConfig cfg;
    cfg.input_width = 4;
    cfg.hidden_layers = 2;
    cfg.hidden_width = 5;
    cfg.output_width = 3;
    cfg.hidden_activation = Activation::Identity;
    cfg.output_activation = OutputActivation::Identity;
    MLPParams<float> p = init_mlp(cfg, 41);

    // Collapse W2 (W1 (W0 x + b0) + b1) + b2 by explicit matrix algebra.
    auto apply_layer = [](const MLPParams<float>::Layer& l, const std::vector<double>& x) {
        std::vector<double> y(std::size_t(l.out));
        for (int r = 0; r < l.out; ++r) {
            double acc = l.b[std::size_t(r)];
            for (int c = 0; c < l.in; ++c) acc += double(l.w[std::size_t(r) * l.in + c]) * x[std::size_t(c)];
            y[std::size_t(r)] = acc;
        }
        return y;
    };

    Rng rng(42);
    for (int s = 0; s < 50; ++s) {
        std::vector<float> x(4);
        for (float& v : x) v = float(rng.uniform(-2.0, 2.0));
        std::vector<float> out(3);
        mlp_forward(std::span<const float>(x), p, cfg, std::span<float>(out));

        std::vector<double> ref(x.begin(), x.end());
        for (const auto& layer : p.layers) ref = apply_layer(layer, ref);
        for (int r = 0; r < 3; ++r) CHECK(double(out[std::size_t(r)]) == doctest::Approx(ref[std::size_t(r)]).epsilon(1e-5));
    }
}

TEST_CASE("zero weights pass biases through the output activation") {
    MLPConfig cfg;
    cfg.input_width = 2;
    cfg.hidden_layers = 1;
    cfg.hidden_width = 4;
    cfg.output_width = 2;
    cfg.output_activation = OutputActivation::Exponential;
    MLPParams<float> p = init_mlp(cfg, 1);
    for (auto& l : p.layers)
        for (auto& w : l.w) w = 0.0f;
    p.layers.back().b = {0.0f, 2.0f};

    std::vector<float> x = {0.3f, -0.7f};
    std::vector<float> out(2);
    mlp_forward(std::span<const float>(x), p, cfg, std::span<float>(out));
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-6));           // exp(0)
    CHECK(out[1] == doctest::Approx(std::exp(2.0)).epsilon(1e-6));  // exp(2)

    cfg.output_activation = OutputActivation::Sigmoid;
    mlp_forward(std::span<const float>(x), p, cfg, std::span<float>(out));
    CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(out[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-6));
}

TEST_CASE("the exponential head clamps its pre-activation at +-30") {
    MLPConfig cfg;
    cfg.input_width = 1;
    cfg.hidden_layers = 0;
    cfg.output_width = 1;
    cfg.output_activation = OutputActivation::Exponential;
    MLPParams<float> p = init_mlp(cfg, 2);
    p.layers[0].w = {1.0f};
    p.layers[0].b = {0.0f};

    std::vector<float> x(1), out(1);
    x[0] = 50.0f;
    mlp_forward(std::span<const float>(x), p, cfg, std::span<float>(out));
    CHECK(out[0] == doctest::Approx(std::exp(30.0)).epsilon(1e-5));
    x[0] = -50.0f;
    mlp_forward(std::span<const float>(x), p, cfg, std::span<float>(out));
    CHECK(out[0] == doctest::Approx(std::exp(-30.0)).epsilon(1e-5));

    // Beyond the clamp the derivative is zero: no gradient flows to w or b.
    MLPCache<float> cache;
    x[0] = 50.0f;
    mlp_forward(std::span<const float>(x), p, cfg, std::span<float>(out), &cache);
    MLPParams<float> grads = mlp_zeros_like(p);
    std::vector<float> up = {1.0f};
    std::vector<float> ig(1);
    mlp_backward(std::span<const float>(up), p, cfg, cache, grads, std::span<float>(ig));
    CHECK(grads.layers[0].w[0] == 0.0f);
    CHECK(grads.layers[0].b[0] == 0.0f);
    CHECK(ig[0] == 0.0f);
}

TEST_CASE("backward matches finite differences in double precision") {
    for (auto acts : {std::pair{Activation::Identity, OutputActivation::Exponential},
                      std::pair{Activation::LeakyReLU, OutputActivation::Sigmoid},
                      std::pair{Activation::ReLU, OutputActivation::Identity}}) {
        MLPConfig cfg;
        cfg.input_width = 5;
        cfg.hidden_layers = 2;
        cfg.hidden_width = 6;
        cfg.output_width = 3;
        cfg.hidden_activation = acts.first;
        cfg.output_activation = acts.second;
        MLPParams<double> p = to_double_params(init_mlp(cfg, 7));
        // Move pre-activations away from the ReLU kinks so the finite
        // difference window never straddles one.
        Rng brng(8);
        for (auto& l : p.layers)
            for (auto& b : l.b) b = brng.uniform(0.05, 0.25);

        Rng rng(9);
        std::vector<double> x(5), up(3);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        for (double& v : up) v = rng.uniform(-1.0, 1.0);

        std::vector<double> out(3);
        MLPCache<double> cache;
        mlp_forward(std::span<const double>(x), p, cfg, std::span<double>(out), &cache);
        MLPParams<double> grads = mlp_zeros_like(p);
        std::vector<double> ig(5);
        mlp_backward(std::span<const double>(up), p, cfg, cache, grads, std::span<double>(ig));

        auto scalar_loss = [&]() {
            std::vector<double> o(3);
            mlp_forward(std::span<const double>(x), p, cfg, std::span<double>(o));
            return up[0] * o[0] + up[1] * o[1] + up[2] * o[2];
        };
        const double h = 1e-6;
        auto check_fd = [&](double& slot, double analytic) {
            double saved = slot;
            slot = saved + h;
            double hi = scalar_loss();
            slot = saved - h;
            double lo = scalar_loss();
            slot = saved;
            double fd = (hi - lo) / (2.0 * h);
            CHECK(analytic == doctest::Approx(fd).epsilon(1e-5));
        };
        for (std::size_t i = 0; i < p.layers.size(); ++i) {
            for (std::size_t k = 0; k < p.layers[i].w.size(); k += 7)
                check_fd(p.layers[i].w[k], grads.layers[i].w[k]);
            for (std::size_t k = 0; k < p.layers[i].b.size(); ++k)
                check_fd(p.layers[i].b[k], grads.layers[i].b[k]);
        }
        for (std::size_t k = 0; k < x.size(); ++k) check_fd(x[k], ig[k]);
    }
}

TEST_CASE("relative L2 loss values and gradients") {
    std::vector<float> pred = {2.0f};
    std::vector<float> target = {1.0f};
    std::vector<float> grad(1, 0.0f);
    double loss = relative_l2_loss(std::span<const float>(pred), std::span<const float>(target),
                                   std::span<float>(grad));
    CHECK(loss == doctest::Approx(1.0 / 4.01).epsilon(1e-12));
    CHECK(grad[0] == doctest::Approx(2.0 / 4.01).epsilon(1e-6));

    // Sum form with an externally supplied scale.
    std::vector<float> p2 = {2.0f, 0.0f};
    std::vector<float> t2 = {1.0f, 0.5f};
    std::vector<float> g2(2, 0.0f);
    double sum = relative_l2_parts(std::span<const float>(p2), std::span<const float>(t2), 0.5,
                                   std::span<float>(g2));
    CHECK(sum == doctest::Approx(1.0 / 4.01 + 0.25 / 0.01).epsilon(1e-12));
    CHECK(g2[0] == doctest::Approx(0.5 * 2.0 / 4.01).epsilon(1e-6));
    CHECK(g2[1] == doctest::Approx(0.5 * 2.0 * (-0.5) / 0.01).epsilon(1e-6));

    CHECK_THROWS_AS(relative_l2_loss(std::span<const float>(pred), std::span<const float>(t2),
                                     std::span<float>(grad)),
                    config_error);
}

TEST_CASE("l2 penalty accumulates value and gradient") {
    std::vector<float> w = {1.0f, -2.0f, 0.5f};
    std::vector<float> g = {0.1f, 0.1f, 0.1f};
    double pen = l2_penalty_accumulate(std::span<const float>(w), 0.01, std::span<float>(g));
    CHECK(pen == doctest::Approx(0.01 * (1.0 + 4.0 + 0.25)).epsilon(1e-12));
    CHECK(g[0] == doctest::Approx(0.1f + 0.02f).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx(0.1f - 0.04f).epsilon(1e-6));
}

TEST_CASE("adam: first step moves each parameter by about lr") {
    AdamConfig acfg;
    acfg.lr = 0.01;
    std::vector<float> params = {1.0f, -2.0f, 3.0f};
    std::vector<float> grads = {0.5f, -0.25f, 2.0f};
    Adam adam(acfg, 3);
    std::vector<std::span<float>> pb = {std::span<float>(params)};
    std::vector<std::span<const float>> gb = {std::span<const float>(grads)};
    adam.step(std::span<const std::span<float>>(pb), std::span<const std::span<const float>>(gb));
    // m/sqrt(v) == sign(g) after bias correction on step one (up to eps).
    CHECK(params[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-4));
    CHECK(params[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-4));
    CHECK(params[2] == doctest::Approx(3.0 - 0.01).epsilon(1e-4));
    CHECK(adam.steps_taken() == 1);
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
    std::vector<float> params = {1.0f, 2.0f};
    std::vector<float> grads = {0.5f, std::numeric_limits<float>::quiet_NaN()};
    Adam adam(AdamConfig{}, 2);
    std::vector<std::span<float>> pb = {std::span<float>(params)};
    std::vector<std::span<const float>> gb = {std::span<const float>(grads)};
    CHECK_THROWS_AS(
        adam.step(std::span<const std::span<float>>(pb), std::span<const std::span<const float>>(gb)),
        config_error);
    CHECK(params[0] == 1.0f);
    CHECK(params[1] == 2.0f);
    CHECK(adam.steps_taken() == 0);

    grads[1] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(
        adam.step(std::span<const std::span<float>>(pb), std::span<const std::span<const float>>(gb)),
        config_error);
    CHECK(params[1] == 2.0f);

    std::vector<float> wrong(3, 0.0f);
    std::vector<std::span<const float>> gb3 = {std::span<const float>(wrong)};
    CHECK_THROWS_AS(
        adam.step(std::span<const std::span<float>>(pb), std::span<const std::span<const float>>(gb3)),
        config_error);
}

TEST_CASE("fifty adam steps fit a tiny regression problem") {
    MLPConfig cfg;
    cfg.input_width = 2;
    cfg.hidden_layers = 1;
    cfg.hidden_width = 8;
    cfg.output_width = 1;
    cfg.hidden_activation = Activation::LeakyReLU;
    cfg.output_activation = OutputActivation::Identity;
    MLPParams<float> p = init_mlp(cfg, 11);

    std::vector<std::span<float>> pb;
    for (auto& l : p.layers) {
        pb.push_back(std::span<float>(l.w));
        pb.push_back(std::span<float>(l.b));
    }
    std::uint64_t total = p.param_count();
    AdamConfig acfg;
    acfg.lr = 0.02;
    Adam adam(acfg, total);

    auto target_fn = [](double a, double b) { return 0.5 * a - 0.3 * b + 0.2; };
    Rng rng(12);
    double first = -1.0, last = -1.0;
    for (int step = 0; step < 50; ++step) {
        MLPParams<float> grads = mlp_zeros_like(p);
        double loss = 0.0;
        for (int s = 0; s < 32; ++s) {
            std::vector<float> x = {float(rng.uniform(-1.0, 1.0)), float(rng.uniform(-1.0, 1.0))};
            std::vector<float> out(1), up(1);
            MLPCache<float> cache;
            mlp_forward(std::span<const float>(x), p, cfg, std::span<float>(out), &cache);
            double t = target_fn(x[0], x[1]);
            double r = double(out[0]) - t;
            loss += r * r / 32.0;
            up[0] = float(2.0 * r / 32.0);
            std::vector<float> ig(2);
            mlp_backward(std::span<const float>(up), p, cfg, cache, grads, std::span<float>(ig));
        }
        if (step == 0) first = loss;
        last = loss;
        std::vector<std::span<const float>> gb;
        for (auto& l : grads.layers) {
            gb.push_back(std::span<const float>(l.w));
            gb.push_back(std::span<const float>(l.b));
        }
        adam.step(std::span<const std::span<float>>(pb), std::span<const std::span<const float>>(gb));
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("forward validates widths and layer counts") {
    MLPConfig cfg;
    cfg.input_width = 3;
    cfg.output_width = 2;
    MLPParams<float> p = init_mlp(cfg, 13);
    std::vector<float> bad_in(4), out(2);
    CHECK_THROWS_AS(mlp_forward(std::span<const float>(bad_in), p, cfg, std::span<float>(out)),
                    config_error);
    std::vector<float> in(3), bad_out(3);
    CHECK_THROWS_AS(mlp_forward(std::span<const float>(in), p, cfg, std::span<float>(bad_out)),
                    config_error);
    MLPConfig other = cfg;
    other.hidden_layers = 3;
    CHECK_THROWS_AS(mlp_forward(std::span<const float>(in), p, other, std::span<float>(out)),
                    config_error);

    MLPConfig bad = cfg;
    bad.hidden_width = 0;
    CHECK_THROWS_AS(validate(bad), config_error);
    bad = cfg;
    bad.hidden_layers = -1;
    CHECK_THROWS_AS(validate(bad), config_error);
}

TEST_CASE("xavier init is deterministic per seed with zero biases") {
    MLPConfig cfg;
    MLPParams<float> a = init_mlp(cfg, 99);
    MLPParams<float> b = init_mlp(cfg, 99);
    MLPParams<float> c = init_mlp(cfg, 100);
    REQUIRE(a.layers.size() == b.layers.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        CHECK(a.layers[i].w == b.layers[i].w);
        for (float bias : a.layers[i].b) CHECK(bias == 0.0f);
        double limit = std::sqrt(6.0 / double(a.layers[i].in + a.layers[i].out));
        for (float w : a.layers[i].w) {
            CHECK(std::abs(double(w)) <= limit);
        }
        if (a.layers[i].w != c.layers[i].w) any_diff = true;
    }
    CHECK(any_diff);
}
