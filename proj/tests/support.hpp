#pragma once

// Test-only oracles shared by the unit and acceptance suites. Nothing here
// calls into the backward pass or the optimizer it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <gfs/data.hpp>
#include <gfs/models.hpp>
#include <gfs/nn.hpp>

namespace gfs::testkit {

/// Mean batch cross-entropy computed from the logits alone.
inline double mean_loss(const Network& net, const StreamBatch& batch) {
    const Matrix z = net.logits(batch);
    double total = 0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double mx = z.row(i).maxCoeff();
        const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
        total += lse - z(i, batch.labels[std::size_t(i)]);
    }
    return total / double(z.rows());
}

struct GradCheck {
    double max_rel_error = 0;
    std::size_t checked = 0;
};

/// Compares every analytic gradient entry with a central difference of the
/// mean loss. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(Network net, const StreamBatch& batch, double h = 1e-5, double floor = 1e-6) {
    std::vector<LayerParams> grads;
    net.loss_and_gradients(batch, grads);
    GradCheck out;
    auto& params = net.parameters();
    auto probe = [&](double& p, double analytic) {
        const double saved = p;
        p = saved + h;
        const double up = mean_loss(net, batch);
        p = saved - h;
        const double down = mean_loss(net, batch);
        p = saved;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
        out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
        ++out.checked;
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        for (Eigen::Index r = 0; r < params[l].weights.rows(); ++r)
            for (Eigen::Index c = 0; c < params[l].weights.cols(); ++c)
                probe(params[l].weights(r, c), grads[l].weights(r, c));
        for (Eigen::Index r = 0; r < params[l].biases.size(); ++r) probe(params[l].biases(r), grads[l].biases(r));
    }
    return out;
}

inline StreamBatch random_batch(std::mt19937_64& rng, long n, long dim, bool two_stream) {
    std::normal_distribution<double> g(0.0, 1.0);
    StreamBatch b;
    b.a = Matrix::NullaryExpr(n, dim, [&] { return g(rng); });
    if (two_stream) b.b = Matrix::NullaryExpr(n, dim, [&] { return g(rng); });
    for (long i = 0; i < n; ++i) b.labels.push_back(int(rng() % 2));
    return b;
}

/// Scalar Adam written directly from the update equations.
struct ScalarAdam {
    double m = 0, v = 0;
    int t = 0;

    double step(double w, double g, double lr, double b1, double b2, double eps) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        return w - lr * mhat / (std::sqrt(vhat) + eps);
    }
};

/// Fixed-length recordings with a clear offset between classes.
inline Dataset separable_dataset(int n, std::size_t length = 60, double gap = 1.0) {
    Dataset ds;
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.sample_id = "s" + std::to_string(i);
        s.observer_id = i;
        s.video_id = i % 2;
        s.label = i % 2 == 0 ? Label::Genuine : Label::Posed;
        const double level = s.label == Label::Genuine ? 3.0 + gap : 3.0;
        s.left.assign(length, level);
        s.right.assign(length, level);
        for (std::size_t t = 0; t < length; ++t) {
            s.left[t] += 0.01 * double((i * 7 + int(t)) % 5);
            s.right[t] += 0.01 * double((i * 3 + int(t)) % 5);
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

} // namespace gfs::testkit
