#pragma once

/// @file nn.hpp
/// @brief Dense layers, activations, softmax cross-entropy and full-batch Adam.
///
/// Everything is double precision. Matrices are Eigen dense types; a layer
/// maps in_dim -> out_dim with weights stored out_dim x in_dim.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "random.hpp"

namespace gfs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { ReLU, Tanh, Sigmoid };

inline constexpr std::string_view activation_name(Activation a) {
    switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

inline Activation parse_activation(std::string_view s) {
    if (s == "relu" || s == "ReLU") return Activation::ReLU;
    if (s == "tanh" || s == "Tanh") return Activation::Tanh;
    if (s == "sigmoid" || s == "Sigmoid") return Activation::Sigmoid;
    throw ValidationError("unknown activation '" + std::string(s) + "'");
}

struct LayerParams {
    Matrix weights; // out_dim x in_dim
    Vector biases;  // out_dim

    Eigen::Index in_dim() const noexcept { return weights.cols(); }
    Eigen::Index out_dim() const noexcept { return weights.rows(); }

    static LayerParams zeros(Eigen::Index out_dim, Eigen::Index in_dim) {
        return {Matrix::Zero(out_dim, in_dim), Vector::Zero(out_dim)};
    }
    static LayerParams zeros_like(const LayerParams& p) { return zeros(p.out_dim(), p.in_dim()); }
};

/// Glorot-uniform weights, zero biases.
inline LayerParams init_layer(long in_dim, long out_dim, std::uint64_t seed) {
    if (in_dim <= 0 || out_dim <= 0) {
        throw ValidationError("layer dimensions must be positive (got " + std::to_string(in_dim) +
                              " -> " + std::to_string(out_dim) + ")");
    }
    const double limit = std::sqrt(6.0 / double(in_dim + out_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto rng = make_rng({seed, 0x696e6974ULL});
    LayerParams p = LayerParams::zeros(out_dim, in_dim);
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < p.weights.cols(); ++c) p.weights(r, c) = dist(rng);
    return p;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <class Derived>
typename Derived::PlainObject activate(const Eigen::MatrixBase<Derived>& x, Activation a) {
    switch (a) {
    case Activation::ReLU: return x.array().max(0.0).matrix();
    case Activation::Tanh: return x.array().tanh().matrix();
    case Activation::Sigmoid: return (1.0 / (1.0 + (-x.array()).exp())).matrix();
    }
    return x;
}

/// Elementwise derivative of activate at x. ReLU'(0) is taken as 0.
template <class Derived>
typename Derived::PlainObject activate_grad(const Eigen::MatrixBase<Derived>& x, Activation a) {
    switch (a) {
    case Activation::ReLU: return (x.array() > 0.0).template cast<double>().matrix();
    case Activation::Tanh: return (1.0 - x.array().tanh().square()).matrix();
    case Activation::Sigmoid: {
        auto s = (1.0 / (1.0 + (-x.array()).exp())).eval();
        return (s * (1.0 - s)).matrix();
    }
    }
    return x;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

struct LossAndGrad {
    double loss;
    Eigen::Vector2d grad;
};

inline Eigen::Vector2d softmax(const Eigen::Vector2d& logits) {
    const Eigen::Vector2d e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

/// -log softmax(logits)[label] and its gradient softmax - onehot.
inline LossAndGrad softmax_cross_entropy(const Eigen::Vector2d& logits, int label) {
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    Eigen::Vector2d g = softmax(logits);
    g(label) -= 1.0;
    return {lse - logits(label), g};
}

/// Mean cross-entropy over the rows of an N x 2 logit matrix. grad_out
/// receives d(mean loss)/d(logits), already divided by N.
inline double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix& grad_out) {
    const auto n = logits.rows();
    grad_out.resize(n, 2);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        auto [loss, g] = softmax_cross_entropy(Eigen::Vector2d(logits.row(i).transpose()), labels[std::size_t(i)]);
        total += loss;
        grad_out.row(i) = g.transpose() / double(n);
    }
    return total / double(n);
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 1000;
    Activation activation = Activation::ReLU;
    int hidden_units = 60;
    std::uint64_t init_seed = 0;
};

inline void validate(const TrainConfig& c) {
    if (!(c.learning_rate > 0)) throw ValidationError("learning_rate must be positive");
    if (c.weight_decay < 0) throw ValidationError("weight_decay must be non-negative");
    if (!(c.beta1 >= 0 && c.beta1 < 1) || !(c.beta2 >= 0 && c.beta2 < 1)) {
        throw ValidationError("beta1 and beta2 must lie in [0, 1)");
    }
    if (!(c.epsilon > 0)) throw ValidationError("epsilon must be positive");
    if (c.epochs < 1) throw ValidationError("epochs must be >= 1");
    if (c.hidden_units < 1) throw ValidationError("hidden_units must be >= 1");
}

struct AdamState {
    std::vector<LayerParams> m;
    std::vector<LayerParams> v;
    std::uint64_t t = 0;

    static AdamState for_params(std::span<const LayerParams> params) {
        AdamState s;
        for (const auto& p : params) {
            s.m.push_back(LayerParams::zeros_like(p));
            s.v.push_back(LayerParams::zeros_like(p));
        }
        return s;
    }
};

/// g += weight_decay * w on weight matrices only (coupled L2; biases untouched).
inline void add_weight_decay(std::span<LayerParams> grads, std::span<const LayerParams> params, double weight_decay) {
    if (weight_decay == 0.0) return;
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i].weights += weight_decay * params[i].weights;
}

namespace detail {

template <class P, class G, class M>
void adam_update(P& p, const G& g, M& m, M& v, double lr, double b1, double b2, double c1, double c2, double eps) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

} // namespace detail

/// One bias-corrected Adam step. grads must already contain any weight-decay term.
inline void adam_step(std::span<LayerParams> params, std::span<const LayerParams> grads, AdamState& state,
                      const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
        throw ValidationError("adam_step: parameter/gradient/state layer counts differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        for (const LayerParams* q : std::initializer_list<const LayerParams*>{&grads[i], &state.m[i], &state.v[i]}) {
            if (q->weights.rows() != p.weights.rows() || q->weights.cols() != p.weights.cols() ||
                q->biases.size() != p.biases.size()) {
                throw ValidationError("adam_step: shape mismatch in layer " + std::to_string(i));
            }
        }
    }
    state.t += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, double(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        detail::adam_update(params[i].weights, grads[i].weights, state.m[i].weights, state.v[i].weights,
                            cfg.learning_rate, cfg.beta1, cfg.beta2, c1, c2, cfg.epsilon);
        detail::adam_update(params[i].biases, grads[i].biases, state.m[i].biases, state.v[i].biases,
                            cfg.learning_rate, cfg.beta1, cfg.beta2, c1, c2, cfg.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// A network that can report its parameters and the gradient of its mean batch loss.
template <class Net, class Batch>
concept Trainable = requires(Net& net, const Net& cnet, const Batch& batch, std::vector<LayerParams>& grads) {
    { net.parameters() } -> std::same_as<std::vector<LayerParams>&>;
    { cnet.loss_and_gradients(batch, grads) } -> std::convertible_to<double>;
};

/// Full-batch training: one forward/backward pass and one Adam step per epoch.
/// Returns the mean cross-entropy observed at each epoch before its step.
template <class Net, class Batch>
    requires Trainable<Net, Batch>
std::vector<double> fit(Net& net, const Batch& batch, const TrainConfig& cfg) {
    validate(cfg);
    auto& params = net.parameters();
    auto state = AdamState::for_params(params);
    std::vector<LayerParams> grads;
    std::vector<double> history;
    history.reserve(std::size_t(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double loss = net.loss_and_gradients(batch, grads);
        if (!std::isfinite(loss)) {
            throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        }
        history.push_back(loss);
        add_weight_decay(grads, params, cfg.weight_decay);
        adam_step(params, grads, state, cfg);
    }
    return history;
}

} // namespace gfs
