#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <gfs/models.hpp>
#include <gfs/nn.hpp>

#include "support.hpp"

using namespace gfs;

TEST(InitLayer, DeterministicWithZeroBiases) {
    const auto a = init_layer(3, 2, 1);
    const auto b = init_layer(3, 2, 1);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.weights.rows(), 2);
    EXPECT_EQ(a.weights.cols(), 3);
    EXPECT_TRUE(a.biases.isZero(0.0));
    EXPECT_NE(init_layer(3, 2, 2).weights, a.weights);
}

TEST(InitLayer, GlorotBoundsAndZeroMean) {
    const auto p = init_layer(1000, 100, 5); // 1e5 draws
    const double limit = std::sqrt(6.0 / 1100.0);
    EXPECT_LE(p.weights.maxCoeff(), limit);
    EXPECT_GE(p.weights.minCoeff(), -limit);
    const double se = (limit / std::sqrt(3.0)) / std::sqrt(1e5);
    EXPECT_NEAR(p.weights.mean(), 0.0, 3 * se);
}

TEST(InitLayer, RejectsNonPositiveDims) {
    EXPECT_THROW(init_layer(0, 2, 1), ValidationError);
    EXPECT_THROW(init_layer(3, -1, 1), ValidationError);
}

TEST(Activation, Values) {
    const Vector x = (Vector(3) << -1, 0, 2).finished();
    EXPECT_EQ(activate(x, Activation::ReLU), (Vector(3) << 0, 0, 2).finished());
    const Vector zero = Vector::Zero(1);
    EXPECT_DOUBLE_EQ(activate(zero, Activation::Sigmoid)(0), 0.5);
    EXPECT_DOUBLE_EQ(activate(zero, Activation::Tanh)(0), 0.0);
    EXPECT_EQ(activate_grad(zero, Activation::ReLU)(0), 0.0);
}

TEST(Activation, GradMatchesFiniteDifferences) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-4, 4);
    const double h = 1e-6;
    for (auto a : {Activation::ReLU, Activation::Tanh, Activation::Sigmoid}) {
        for (int i = 0; i < 200; ++i) {
            double x0 = u(rng);
            if (a == Activation::ReLU && std::abs(x0) < 1e-3) continue;
            Vector x(1), xp(1), xm(1);
            x << x0;
            xp << x0 + h;
            xm << x0 - h;
            const double numeric = (activate(xp, a)(0) - activate(xm, a)(0)) / (2 * h);
            const double analytic = activate_grad(x, a)(0);
            EXPECT_LE(std::abs(numeric - analytic), 1e-6 * std::max(std::abs(analytic), 1e-3))
                << activation_name(a) << " at " << x0;
        }
    }
}

TEST(SoftmaxCrossEntropy, Values) {
    for (int label : {0, 1}) {
        EXPECT_NEAR(softmax_cross_entropy(Eigen::Vector2d(0, 0), label).loss, std::log(2.0), 1e-15);
    }
    const auto big = softmax_cross_entropy(Eigen::Vector2d(1000, 0), 0);
    EXPECT_TRUE(std::isfinite(big.loss));
    EXPECT_NEAR(big.loss, 0.0, 1e-300);
    const auto wrong = softmax_cross_entropy(Eigen::Vector2d(1000, 0), 1);
    EXPECT_NEAR(wrong.loss, 1000.0, 1e-9);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 3);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Vector2d z(g(rng), g(rng));
        const int label = int(rng() % 2);
        const auto res = softmax_cross_entropy(z, label);
        for (int k = 0; k < 2; ++k) {
            Eigen::Vector2d zp = z, zm = z;
            zp(k) += h;
            zm(k) -= h;
            const double numeric =
                (softmax_cross_entropy(zp, label).loss - softmax_cross_entropy(zm, label).loss) / (2 * h);
            EXPECT_LE(std::abs(numeric - res.grad(k)), 1e-6 * std::max(std::abs(res.grad(k)), 1e-3));
        }
    }
}

TEST(SoftmaxCrossEntropy, ProbabilitiesSumToOneAndLossNonNegative) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0, 50);
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::Vector2d z(g(rng), g(rng));
        EXPECT_NEAR(softmax(z).sum(), 1.0, 1e-12);
        EXPECT_GE(softmax_cross_entropy(z, int(trial % 2)).loss, 0.0);
    }
}

TEST(AdamStep, HandComputedScalar) {
    std::vector<LayerParams> p{LayerParams::zeros(1, 1)}, g{LayerParams::zeros(1, 1)};
    p[0].weights(0, 0) = 1.0;
    g[0].weights(0, 0) = 0.5;
    auto state = AdamState::for_params(p);
    adam_step(p, g, state, TrainConfig{});
    EXPECT_EQ(state.t, 1u);
    EXPECT_NEAR(state.m[0].weights(0, 0), 0.05, 1e-15);
    EXPECT_NEAR(state.v[0].weights(0, 0), 2.5e-4, 1e-18);
    EXPECT_NEAR(p[0].weights(0, 0), 1.0 - 1e-4 * 0.5 / (0.5 + 1e-8), 1e-15);
    EXPECT_EQ(p[0].biases(0), 0.0);
}

TEST(AdamStep, ZeroGradientIsFixedPoint) {
    std::vector<LayerParams> p{init_layer(4, 3, 1)}, g{LayerParams::zeros(3, 4)};
    const auto before = p[0].weights;
    auto state = AdamState::for_params(p);
    adam_step(p, g, state, TrainConfig{});
    EXPECT_EQ(p[0].weights, before);
}

TEST(AdamStep, MatchesScalarOracle) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0, 1);
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    std::vector<LayerParams> p{init_layer(2, 2, 3)};
    auto state = AdamState::for_params(p);
    std::vector<testkit::ScalarAdam> oracle(6);
    std::vector<double> w{p[0].weights(0, 0), p[0].weights(0, 1), p[0].weights(1, 0), p[0].weights(1, 1), 0, 0};
    for (int step = 0; step < 2; ++step) {
        std::vector<LayerParams> g{LayerParams::zeros(2, 2)};
        std::vector<double> gs(6);
        for (auto& x : gs) x = n(rng);
        g[0].weights << gs[0], gs[1], gs[2], gs[3];
        g[0].biases << gs[4], gs[5];
        adam_step(p, g, state, cfg);
        for (int i = 0; i < 6; ++i) w[i] = oracle[i].step(w[i], gs[i], cfg.learning_rate, 0.9, 0.999, 1e-8);
    }
    EXPECT_NEAR(p[0].weights(0, 0), w[0], 1e-12);
    EXPECT_NEAR(p[0].weights(0, 1), w[1], 1e-12);
    EXPECT_NEAR(p[0].weights(1, 0), w[2], 1e-12);
    EXPECT_NEAR(p[0].weights(1, 1), w[3], 1e-12);
    EXPECT_NEAR(p[0].biases(0), w[4], 1e-12);
    EXPECT_NEAR(p[0].biases(1), w[5], 1e-12);
    EXPECT_TRUE((state.v[0].weights.array() >= 0).all());
}

TEST(AdamStep, ShapeMismatchThrows) {
    std::vector<LayerParams> p{LayerParams::zeros(2, 2)}, g{LayerParams::zeros(2, 3)};
    auto state = AdamState::for_params(p);
    EXPECT_THROW(adam_step(p, g, state, TrainConfig{}), ValidationError);
}

TEST(WeightDecay, AppliesToWeightsOnly) {
    std::vector<LayerParams> p{LayerParams::zeros(1, 1)}, g{LayerParams::zeros(1, 1)};
    p[0].weights(0, 0) = 2.0;
    p[0].biases(0) = 3.0;
    add_weight_decay(g, p, 1e-5);
    EXPECT_DOUBLE_EQ(g[0].weights(0, 0), 2e-5);
    EXPECT_EQ(g[0].biases(0), 0.0);
}

namespace {

StreamBatch toy_separable() {
    StreamBatch b;
    b.a.resize(10, 4);
    for (int i = 0; i < 10; ++i) {
        const double sign = i % 2 == 0 ? 1.0 : -1.0;
        for (int j = 0; j < 4; ++j) b.a(i, j) = sign * (2.0 + 0.1 * ((i + j) % 3));
        b.labels.push_back(i % 2);
    }
    return b;
}

double accuracy(const Network& net, const StreamBatch& b) {
    const auto pred = net.predict(b);
    int hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += int(pred[i]) == b.labels[i];
    return double(hit) / double(pred.size());
}

} // namespace

TEST(Train, SeparableToyReachesFullAccuracy) {
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.init_seed = 3;
    const auto data = toy_separable();
    const auto res = train(topology_for(Scenario::LeftOnly, 4, cfg), data, cfg);
    EXPECT_EQ(res.loss_history.size(), 200u);
    EXPECT_EQ(accuracy(res.network, data), 1.0);
}

TEST(Train, LossDecreasesOverFirstEpochs) {
    TrainConfig cfg;
    cfg.epochs = 11;
    const auto data = toy_separable();
    for (std::uint64_t seed : {1, 2, 3}) {
        cfg.init_seed = seed;
        const auto res = train(topology_for(Scenario::LeftOnly, 4, cfg), data, cfg);
        for (std::size_t e = 1; e < res.loss_history.size(); ++e) {
            EXPECT_LE(res.loss_history[e], res.loss_history[e - 1] + 1e-9);
        }
    }
}

TEST(Train, DeterministicAndValidated) {
    TrainConfig cfg;
    cfg.epochs = 30;
    const auto data = toy_separable();
    const auto topo = topology_for(Scenario::LeftOnly, 4, cfg);
    EXPECT_EQ(train(topo, data, cfg).loss_history, train(topo, data, cfg).loss_history);
    cfg.epochs = 0;
    EXPECT_THROW(train(topo, data, cfg), ValidationError);
}

TEST(Train, DivergenceNamesEpoch) {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 1e300;
    const auto data = toy_separable();
    try {
        train(topology_for(Scenario::LeftOnly, 4, cfg), data, cfg);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite loss at epoch"), std::string::npos);
    }
}

TEST(Gradients, MatchFiniteDifferencesOnSmallNets) {
    std::mt19937_64 rng(12);
    for (auto act : {Activation::ReLU, Activation::Tanh, Activation::Sigmoid}) {
        for (int trial = 0; trial < 5; ++trial) {
            const long in = 1 + long(rng() % 8), hidden = 1 + long(rng() % 5);
            ModelTopology topo{TopologyKind::SingleStream, in, hidden, act};
            const Network net(topo, rng());
            const auto batch = testkit::random_batch(rng, 6, in, false);
            const auto res = testkit::check_gradients(net, batch);
            EXPECT_LT(res.max_rel_error, 1e-4) << activation_name(act) << " in=" << in << " hidden=" << hidden;
        }
    }
}
