#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sphenc/error.hpp"
#include "sphenc/rng.hpp"

namespace sphenc {

// Small fully connected head with explicit forward/backward, plus the
// relative-L2 loss and Adam. Everything is templated on the scalar so the
// finite-difference checks can run the identical code path in double.

enum class Activation : std::uint32_t { Identity = 0, ReLU = 1, LeakyReLU = 2 };
enum class OutputActivation : std::uint32_t { Identity = 0, Exponential = 1, Sigmoid = 2 };

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kExpClamp = 30.0;  // pre-activation clamp for the exponential head

struct MLPConfig {
    int input_width = 16;
    int hidden_layers = 2;
    int hidden_width = 16;
    int output_width = 3;
    Activation hidden_activation = Activation::Identity;
    OutputActivation output_activation = OutputActivation::Exponential;

    int layer_count() const { return hidden_layers + 1; }
    int layer_in(int i) const { return i == 0 ? input_width : hidden_width; }
    int layer_out(int i) const { return i == hidden_layers ? output_width : hidden_width; }
};

inline void validate(const MLPConfig& cfg) {
    if (cfg.input_width < 1 || cfg.output_width < 1 || cfg.hidden_width < 1)
        throw config_error("mlp: widths must be positive");
    if (cfg.hidden_layers < 0 || cfg.hidden_layers > 16)
        throw config_error("mlp: hidden layer count out of range");
}

template <typename S>
struct MLPParams {
    struct Layer {
        int in = 0, out = 0;
        std::vector<S> w;  // row-major [out][in]
        std::vector<S> b;
    };
    std::vector<Layer> layers;

    std::uint64_t param_count() const {
        std::uint64_t n = 0;
        for (const auto& l : layers) n += l.w.size() + l.b.size();
        return n;
    }
};

template <typename S>
MLPParams<S> mlp_zeros_like(const MLPParams<S>& p) {
    MLPParams<S> z;
    z.layers.resize(p.layers.size());
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        z.layers[i].in = p.layers[i].in;
        z.layers[i].out = p.layers[i].out;
        z.layers[i].w.assign(p.layers[i].w.size(), S(0));
        z.layers[i].b.assign(p.layers[i].b.size(), S(0));
    }
    return z;
}

// Xavier-uniform weights, zero biases. With near-zero encoded features this
// keeps output pre-activations near zero, so the exponential head starts
// near 1.
inline MLPParams<float> init_mlp(const MLPConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    Rng rng(seed);
    MLPParams<float> p;
    p.layers.resize(std::size_t(cfg.layer_count()));
    for (int i = 0; i < cfg.layer_count(); ++i) {
        auto& layer = p.layers[std::size_t(i)];
        layer.in = cfg.layer_in(i);
        layer.out = cfg.layer_out(i);
        double limit = std::sqrt(6.0 / double(layer.in + layer.out));
        layer.w.resize(std::size_t(layer.in) * std::size_t(layer.out));
        for (auto& w : layer.w) w = float(rng.uniform(-limit, limit));
        layer.b.assign(std::size_t(layer.out), 0.0f);
    }
    return p;
}

template <typename S>
struct MLPCache {
    std::vector<std::vector<S>> inputs;  // inputs[i] feeds layer i
    std::vector<std::vector<S>> pre;     // pre[i] = W_i * inputs[i] + b_i
};

namespace detail {

template <typename S>
S hidden_act(S z, Activation a) {
    switch (a) {
        case Activation::ReLU: return z > S(0) ? z : S(0);
        case Activation::LeakyReLU: return z > S(0) ? z : S(kLeakySlope) * z;
        default: return z;
    }
}

template <typename S>
S hidden_act_deriv(S z, Activation a) {
    switch (a) {
        case Activation::ReLU: return z > S(0) ? S(1) : S(0);
        case Activation::LeakyReLU: return z > S(0) ? S(1) : S(kLeakySlope);
        default: return S(1);
    }
}

template <typename S>
S output_act(S z, OutputActivation a) {
    switch (a) {
        case OutputActivation::Exponential: {
            S c = z < S(-kExpClamp) ? S(-kExpClamp) : (z > S(kExpClamp) ? S(kExpClamp) : z);
            return std::exp(c);
        }
        case OutputActivation::Sigmoid: return S(1) / (S(1) + std::exp(-z));
        default: return z;
    }
}

template <typename S>
S output_act_deriv(S z, S activated, OutputActivation a) {
    switch (a) {
        case OutputActivation::Exponential:
            return (z <= S(-kExpClamp) || z >= S(kExpClamp)) ? S(0) : activated;
        case OutputActivation::Sigmoid: return activated * (S(1) - activated);
        default: return S(1);
    }
}

}  // namespace detail

template <typename S>
void mlp_forward(std::span<const S> input, const MLPParams<S>& params, const MLPConfig& cfg,
                 std::span<S> output, MLPCache<S>* cache = nullptr) {
    if (int(input.size()) != cfg.input_width) throw config_error("mlp_forward: input width mismatch");
    if (int(output.size()) != cfg.output_width) throw config_error("mlp_forward: output width mismatch");
    if (int(params.layers.size()) != cfg.layer_count())
        throw config_error("mlp_forward: layer count mismatch");

    const int L = cfg.layer_count();
    if (cache) {
        cache->inputs.resize(std::size_t(L));
        cache->pre.resize(std::size_t(L));
    }

    std::vector<S> cur(input.begin(), input.end());
    std::vector<S> next;
    for (int i = 0; i < L; ++i) {
        const auto& layer = params.layers[std::size_t(i)];
        if (cache) cache->inputs[std::size_t(i)] = cur;
        next.assign(std::size_t(layer.out), S(0));
        for (int r = 0; r < layer.out; ++r) {
            const S* wr = layer.w.data() + std::size_t(r) * std::size_t(layer.in);
            S acc = layer.b[std::size_t(r)];
            for (int c = 0; c < layer.in; ++c) acc += wr[c] * cur[std::size_t(c)];
            next[std::size_t(r)] = acc;
        }
        if (cache) cache->pre[std::size_t(i)] = next;
        if (i < L - 1) {
            for (auto& z : next) z = detail::hidden_act(z, cfg.hidden_activation);
        } else {
            for (auto& z : next) z = detail::output_act(z, cfg.output_activation);
        }
        cur.swap(next);
    }
    for (int r = 0; r < cfg.output_width; ++r) output[std::size_t(r)] = cur[std::size_t(r)];
}

// Accumulates parameter gradients into grads and writes d(loss)/d(input).
template <typename S>
void mlp_backward(std::span<const S> upstream, const MLPParams<S>& params, const MLPConfig& cfg,
                  const MLPCache<S>& cache, MLPParams<S>& grads, std::span<S> input_grad) {
    const int L = cfg.layer_count();
    std::vector<S> delta(upstream.begin(), upstream.end());
    std::vector<S> prev;

    for (int i = L - 1; i >= 0; --i) {
        const auto& layer = params.layers[std::size_t(i)];
        const auto& pre = cache.pre[std::size_t(i)];
        if (i == L - 1) {
            for (int r = 0; r < layer.out; ++r) {
                S a = detail::output_act(pre[std::size_t(r)], cfg.output_activation);
                delta[std::size_t(r)] *= detail::output_act_deriv(pre[std::size_t(r)], a, cfg.output_activation);
            }
        } else {
            for (int r = 0; r < layer.out; ++r)
                delta[std::size_t(r)] *= detail::hidden_act_deriv(pre[std::size_t(r)], cfg.hidden_activation);
        }

        const auto& x = cache.inputs[std::size_t(i)];
        auto& glayer = grads.layers[std::size_t(i)];
        for (int r = 0; r < layer.out; ++r) {
            S dz = delta[std::size_t(r)];
            glayer.b[std::size_t(r)] += dz;
            S* gw = glayer.w.data() + std::size_t(r) * std::size_t(layer.in);
            for (int c = 0; c < layer.in; ++c) gw[c] += dz * x[std::size_t(c)];
        }

        prev.assign(std::size_t(layer.in), S(0));
        for (int r = 0; r < layer.out; ++r) {
            S dz = delta[std::size_t(r)];
            const S* wr = layer.w.data() + std::size_t(r) * std::size_t(layer.in);
            for (int c = 0; c < layer.in; ++c) prev[std::size_t(c)] += dz * wr[c];
        }
        delta.swap(prev);
    }
    for (std::size_t c = 0; c < input_grad.size(); ++c) input_grad[c] = delta[c];
}

// Relative L2: (pred - target)^2 / (stop_grad(pred)^2 + 0.01) per element.
// Returns the sum of element losses; grad_out (if nonempty) receives
// grad_scale * 2 (pred - target) / (pred^2 + 0.01). The denominator is
// treated as a constant, matching the stop-gradient definition.
template <typename S>
double relative_l2_parts(std::span<const S> pred, std::span<const S> target, double grad_scale,
                         std::span<S> grad_out) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double p = double(pred[i]);
        double r = p - double(target[i]);
        double denom = p * p + 0.01;
        sum += r * r / denom;
        if (!grad_out.empty()) grad_out[i] = S(grad_scale * 2.0 * r / denom);
    }
    return sum;
}

// Mean element loss and its (stop-gradient) derivative with respect to pred.
template <typename S>
double relative_l2_loss(std::span<const S> pred, std::span<const S> target, std::span<S> grad_out) {
    if (pred.size() != target.size()) throw config_error("relative_l2: size mismatch");
    if (pred.empty()) throw config_error("relative_l2: empty input");
    double n = double(pred.size());
    return relative_l2_parts(pred, target, 1.0 / n, grad_out) / n;
}

// L2 penalty lambda * sum(w^2); adds 2 lambda w to the gradient.
inline double l2_penalty_accumulate(std::span<const float> params, double lambda,
                                    std::span<float> grads) {
    double penalty = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double w = double(params[i]);
        penalty += w * w;
        grads[i] += float(2.0 * lambda * w);
    }
    return lambda * penalty;
}

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction over a fixed sequence of parameter
// blocks. A non-finite gradient anywhere rejects the whole step.
class Adam {
public:
    Adam(const AdamConfig& cfg, std::uint64_t total_params)
        : cfg_(cfg), m_(total_params, 0.0f), v_(total_params, 0.0f) {}

    std::uint64_t size() const { return m_.size(); }
    std::int64_t steps_taken() const { return t_; }

    void step(std::span<const std::span<float>> params, std::span<const std::span<const float>> grads) {
        if (params.size() != grads.size()) throw config_error("adam: block count mismatch");
        std::uint64_t total = 0;
        for (std::size_t b = 0; b < params.size(); ++b) {
            if (params[b].size() != grads[b].size()) throw config_error("adam: block size mismatch");
            total += params[b].size();
        }
        if (total != m_.size()) throw config_error("adam: parameter count changed");

        for (const auto& g : grads)
            for (float x : g)
                if (!std::isfinite(x)) throw config_error("adam: non-finite gradient, step rejected");

        ++t_;
        double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        std::size_t off = 0;
        for (std::size_t b = 0; b < params.size(); ++b) {
            float* p = params[b].data();
            const float* g = grads[b].data();
            std::size_t n = params[b].size();
            for (std::size_t i = 0; i < n; ++i) {
                double gi = double(g[i]);
                double m = double(m_[off + i]) * cfg_.beta1 + (1.0 - cfg_.beta1) * gi;
                double v = double(v_[off + i]) * cfg_.beta2 + (1.0 - cfg_.beta2) * gi * gi;
                m_[off + i] = float(m);
                v_[off + i] = float(v);
                double update = cfg_.lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps);
                p[i] = float(double(p[i]) - update);
            }
            off += n;
        }
    }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<float> m_, v_;
};

}  // namespace sphenc
