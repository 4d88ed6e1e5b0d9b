#pragma once

/// @file models.hpp
/// @brief Single-stream baseline and two-stream fused classifiers, the
/// scenario-dependent feature batches they consume, and the checkpoint format.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "data.hpp"
#include "nn.hpp"

namespace gfs {

// ---------------------------------------------------------------------------
// Scenarios and batches
// ---------------------------------------------------------------------------

enum class Scenario { LeftOnly, RightOnly, LeftRight, LeftPlusLeftDiff, RightPlusRightDiff };

inline constexpr std::string_view scenario_name(Scenario s) {
    switch (s) {
    case Scenario::LeftOnly: return "left";
    case Scenario::RightOnly: return "right";
    case Scenario::LeftRight: return "left-right";
    case Scenario::LeftPlusLeftDiff: return "left-leftdiff";
    case Scenario::RightPlusRightDiff: return "right-rightdiff";
    }
    return "?";
}

inline Scenario parse_scenario(std::string_view s) {
    for (auto sc : {Scenario::LeftOnly, Scenario::RightOnly, Scenario::LeftRight, Scenario::LeftPlusLeftDiff,
                    Scenario::RightPlusRightDiff}) {
        if (s == scenario_name(sc)) return sc;
    }
    throw ValidationError("unknown scenario '" + std::string(s) +
                          "' (expected left, right, left-right, left-leftdiff or right-rightdiff)");
}

inline constexpr bool is_two_stream(Scenario s) {
    return s == Scenario::LeftRight || s == Scenario::LeftPlusLeftDiff || s == Scenario::RightPlusRightDiff;
}

/// Feature rows for one or two streams. `b` is empty for single-stream input.
/// Labels are class indices (0 genuine, 1 posed).
struct StreamBatch {
    Matrix a;
    Matrix b;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    bool two_stream() const noexcept { return b.size() != 0; }
};

/// Padded (186-column) stream matrices for every sample of ds.
inline StreamBatch make_batch(const Dataset& ds, Scenario scenario) {
    const auto n = Eigen::Index(ds.size());
    const auto width = Eigen::Index(kFeatureLength);
    StreamBatch out;
    out.a = Matrix::Zero(n, width);
    if (is_two_stream(scenario)) out.b = Matrix::Zero(n, width);
    out.labels.reserve(ds.size());

    auto fill = [](Matrix& m, Eigen::Index row, std::span<const double> seq) {
        const auto fv = pad(seq);
        for (std::size_t j = 0; j < fv.values.size(); ++j) m(row, Eigen::Index(j)) = fv.values[j];
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = ds.samples[std::size_t(i)];
        switch (scenario) {
        case Scenario::LeftOnly: fill(out.a, i, s.left); break;
        case Scenario::RightOnly: fill(out.a, i, s.right); break;
        case Scenario::LeftRight:
            fill(out.a, i, s.left);
            fill(out.b, i, s.right);
            break;
        case Scenario::LeftPlusLeftDiff:
            fill(out.a, i, s.left);
            fill(out.b, i, differences(s.left));
            break;
        case Scenario::RightPlusRightDiff:
            fill(out.a, i, s.right);
            fill(out.b, i, differences(s.right));
            break;
        }
        out.labels.push_back(static_cast<int>(s.label));
    }
    return out;
}

/// Keeps only the listed columns; the same columns are taken from both streams.
inline StreamBatch select_columns(const StreamBatch& batch, std::span<const std::size_t> columns) {
    std::vector<Eigen::Index> idx(columns.begin(), columns.end());
    StreamBatch out;
    out.a = batch.a(Eigen::all, idx);
    if (batch.two_stream()) out.b = batch.b(Eigen::all, idx);
    out.labels = batch.labels;
    return out;
}

/// Keeps only the listed rows.
inline StreamBatch select_rows(const StreamBatch& batch, std::span<const std::size_t> rows) {
    std::vector<Eigen::Index> idx(rows.begin(), rows.end());
    StreamBatch out;
    out.a = batch.a(idx, Eigen::all);
    if (batch.two_stream()) out.b = batch.b(idx, Eigen::all);
    for (auto r : rows) out.labels.push_back(batch.labels.at(r));
    return out;
}

/// Per-column standardization fitted on training rows. Columns with zero
/// spread keep unit scale.
struct ZScore {
    Vector mean_a, sd_a, mean_b, sd_b;

    static ZScore fit(const StreamBatch& train) {
        ZScore z;
        auto stats = [](const Matrix& m, Vector& mean, Vector& sd) {
            mean = m.colwise().mean().transpose();
            sd = ((m.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
            for (Eigen::Index j = 0; j < sd.size(); ++j) {
                if (!(sd(j) > 1e-12)) sd(j) = 1.0;
            }
        };
        stats(train.a, z.mean_a, z.sd_a);
        if (train.two_stream()) stats(train.b, z.mean_b, z.sd_b);
        return z;
    }

    StreamBatch apply(StreamBatch batch) const {
        auto go = [](Matrix& m, const Vector& mean, const Vector& sd) {
            m = ((m.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array()).matrix();
        };
        go(batch.a, mean_a, sd_a);
        if (batch.two_stream()) go(batch.b, mean_b, sd_b);
        return batch;
    }
};

// ---------------------------------------------------------------------------
// Topology and forward passes
// ---------------------------------------------------------------------------

enum class TopologyKind { SingleStream, TwoStream };

struct ModelTopology {
    TopologyKind kind = TopologyKind::SingleStream;
    long input_dim = 1;
    long hidden_units = 60;
    Activation activation = Activation::ReLU;

    bool operator==(const ModelTopology&) const = default;
};

inline ModelTopology topology_for(Scenario s, long input_dim, const TrainConfig& cfg) {
    return {is_two_stream(s) ? TopologyKind::TwoStream : TopologyKind::SingleStream, input_dim,
            cfg.hidden_units, cfg.activation};
}

namespace detail {

inline void require_dims(const LayerParams& layer, Eigen::Index in) {
    if (layer.in_dim() != in) {
        throw ValidationError("input dimension " + std::to_string(in) + " does not match layer input " +
                              std::to_string(layer.in_dim()));
    }
}

} // namespace detail

/// logits = W2 act(W1 x + b1) + b2
inline Eigen::Vector2d baseline_forward(const LayerParams& hidden, const LayerParams& output, const Vector& x,
                                        Activation act) {
    detail::require_dims(hidden, x.size());
    const Vector h = activate(hidden.weights * x + hidden.biases, act);
    return output.weights * h + output.biases;
}

/// Each stream passes through its own hidden layer; the concatenated hidden
/// vectors [hA | hB] feed one affine layer producing the two logits.
inline Eigen::Vector2d twostream_forward(const LayerParams& hidden_a, const LayerParams& hidden_b,
                                         const LayerParams& fusion, const Vector& xa, const Vector& xb,
                                         Activation act) {
    detail::require_dims(hidden_a, xa.size());
    detail::require_dims(hidden_b, xb.size());
    const auto n = hidden_a.out_dim();
    Vector h(n + hidden_b.out_dim());
    h.head(n) = activate(hidden_a.weights * xa + hidden_a.biases, act);
    h.tail(hidden_b.out_dim()) = activate(hidden_b.weights * xb + hidden_b.biases, act);
    return fusion.weights * h + fusion.biases;
}

/// argmax with ties going to class 0 (genuine).
inline Label predict(const Eigen::Vector2d& logits) {
    return logits(1) > logits(0) ? Label::Posed : Label::Genuine;
}

/// Parameters of either topology. Single-stream holds [hidden, output];
/// two-stream holds [hidden_a, hidden_b, fusion].
class Network {
public:
    Network() = default;

    Network(const ModelTopology& topo, std::uint64_t seed) : topo_(topo) {
        if (topo.input_dim < 1 || topo.hidden_units < 1) throw ValidationError("topology dimensions must be positive");
        const long h = topo.hidden_units;
        if (topo.kind == TopologyKind::SingleStream) {
            layers_.push_back(init_layer(topo.input_dim, h, derive_seed({seed, 0})));
            layers_.push_back(init_layer(h, 2, derive_seed({seed, 1})));
        } else {
            layers_.push_back(init_layer(topo.input_dim, h, derive_seed({seed, 0})));
            layers_.push_back(init_layer(topo.input_dim, h, derive_seed({seed, 1})));
            layers_.push_back(init_layer(2 * h, 2, derive_seed({seed, 2})));
        }
    }

    Network(const ModelTopology& topo, std::vector<LayerParams> layers) : topo_(topo), layers_(std::move(layers)) {
        const std::size_t expected = topo.kind == TopologyKind::SingleStream ? 2 : 3;
        if (layers_.size() != expected) throw ValidationError("wrong number of layers for topology");
        const long h = topo.hidden_units;
        auto check = [](const LayerParams& l, long out, long in) {
            if (l.out_dim() != out || l.in_dim() != in || l.biases.size() != out) {
                throw ValidationError("layer shape does not match topology");
            }
        };
        check(layers_[0], h, topo.input_dim);
        if (expected == 2) {
            check(layers_[1], 2, h);
        } else {
            check(layers_[1], h, topo.input_dim);
            check(layers_[2], 2, 2 * h);
        }
    }

    const ModelTopology& topology() const noexcept { return topo_; }
    std::vector<LayerParams>& parameters() noexcept { return layers_; }
    const std::vector<LayerParams>& parameters() const noexcept { return layers_; }
    bool two_stream() const noexcept { return topo_.kind == TopologyKind::TwoStream; }

    /// N x 2 logit matrix for a batch.
    Matrix logits(const StreamBatch& batch) const {
        Cache c;
        return forward(batch, c);
    }

    std::vector<Label> predict(const StreamBatch& batch) const {
        const Matrix z = logits(batch);
        std::vector<Label> out;
        out.reserve(std::size_t(z.rows()));
        for (Eigen::Index i = 0; i < z.rows(); ++i) out.push_back(gfs::predict(Eigen::Vector2d(z.row(i).transpose())));
        return out;
    }

    /// Mean cross-entropy over the batch; grads receives its gradient with
    /// respect to every layer (no weight decay).
    double loss_and_gradients(const StreamBatch& batch, std::vector<LayerParams>& grads) const {
        Cache c;
        const Matrix z = forward(batch, c);
        Matrix dz;
        const double loss = softmax_cross_entropy(z, batch.labels, dz);
        grads.resize(layers_.size());
        const auto act = topo_.activation;

        auto hidden_backward = [act](const Matrix& x, const Matrix& pre, const Matrix& dh, LayerParams& g) {
            const Matrix da = dh.cwiseProduct(activate_grad(pre, act));
            g.weights.noalias() = da.transpose() * x;
            g.biases = da.colwise().sum().transpose();
        };

        const auto& out = layers_.back();
        auto& gout = grads.back();
        if (!two_stream()) {
            gout.weights.noalias() = dz.transpose() * c.ha;
            gout.biases = dz.colwise().sum().transpose();
            const Matrix dh = dz * out.weights;
            hidden_backward(batch.a, c.pre_a, dh, grads[0]);
        } else {
            const auto h = topo_.hidden_units;
            gout.weights.resize(2, 2 * h);
            gout.weights.leftCols(h).noalias() = dz.transpose() * c.ha;
            gout.weights.rightCols(h).noalias() = dz.transpose() * c.hb;
            gout.biases = dz.colwise().sum().transpose();
            const Matrix dha = dz * out.weights.leftCols(h);
            const Matrix dhb = dz * out.weights.rightCols(h);
            hidden_backward(batch.a, c.pre_a, dha, grads[0]);
            hidden_backward(batch.b, c.pre_b, dhb, grads[1]);
        }
        return loss;
    }

private:
    struct Cache {
        Matrix pre_a, ha, pre_b, hb;
    };

    Matrix forward(const StreamBatch& batch, Cache& c) const {
        const auto act = topo_.activation;
        if (batch.a.cols() != topo_.input_dim || batch.two_stream() != two_stream() ||
            (two_stream() && batch.b.cols() != topo_.input_dim)) {
            throw ValidationError("batch shape does not match network topology (input_dim " +
                                  std::to_string(topo_.input_dim) + ")");
        }
        c.pre_a = (batch.a * layers_[0].weights.transpose()).rowwise() + layers_[0].biases.transpose();
        c.ha = activate(c.pre_a, act);
        const auto& out = layers_.back();
        if (!two_stream()) {
            return (c.ha * out.weights.transpose()).rowwise() + out.biases.transpose();
        }
        const auto h = topo_.hidden_units;
        c.pre_b = (batch.b * layers_[1].weights.transpose()).rowwise() + layers_[1].biases.transpose();
        c.hb = activate(c.pre_b, act);
        Matrix z = c.ha * out.weights.leftCols(h).transpose() + c.hb * out.weights.rightCols(h).transpose();
        return z.rowwise() + out.biases.transpose();
    }

    ModelTopology topo_;
    std::vector<LayerParams> layers_;
};

struct TrainResult {
    Network network;
    std::vector<double> loss_history;
};

/// Initializes a network from cfg.init_seed and trains it full-batch.
inline TrainResult train(const ModelTopology& topo, const StreamBatch& data, const TrainConfig& cfg) {
    validate(cfg);
    if (data.size() == 0) throw ValidationError("training data is empty");
    Network net(topo, cfg.init_seed);
    auto history = fit(net, data, cfg);
    return {std::move(net), std::move(history)};
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

/// A trained network with everything needed to score new recordings.
///
/// Text format, one item per line:
///
///     gfs-checkpoint 1
///     scenario <left|right|left-right|left-leftdiff|right-rightdiff>
///     activation <relu|tanh|sigmoid>
///     input_dim <d>
///     hidden_units <n>
///     mask <186 characters of 0/1>
///     normalization <none|zscore>
///     [zscore <a|b> mean <d values>]      (zscore only; b for two-stream)
///     [zscore <a|b> sd <d values>]
///     layer <rows> <cols>                  (repeated per layer)
///     <rows lines of cols values, row-major>
///     <1 line of rows bias values>
///     end
///
/// Layers appear in order hidden, output (single stream) or hidden_a,
/// hidden_b, fusion (two stream). Numbers use shortest round-trip decimal.
struct Checkpoint {
    Scenario scenario = Scenario::LeftOnly;
    std::string mask; // '0'/'1' per padded position
    std::optional<ZScore> normalization;
    Network network;

    std::vector<std::size_t> selected_columns() const {
        std::vector<std::size_t> cols;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i] == '1') cols.push_back(i);
        return cols;
    }

    /// Turns raw recordings into the network's input batch.
    StreamBatch prepare(const Dataset& ds) const {
        auto cols = selected_columns();
        auto batch = select_columns(make_batch(ds, scenario), cols);
        return normalization ? normalization->apply(std::move(batch)) : batch;
    }
};

namespace detail {

inline void write_row(std::ostream& os, const auto& values) {
    for (Eigen::Index j = 0; j < values.size(); ++j) {
        if (j) os << ' ';
        os << shortest(values(j));
    }
    os << '\n';
}

inline Vector read_values(std::istream& is, Eigen::Index n) {
    Vector v(n);
    std::string tok;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(is >> tok)) throw ValidationError("checkpoint truncated");
        double x{};
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw ValidationError("bad number '" + tok + "' in checkpoint");
        v(j) = x;
    }
    return v;
}

inline void expect(std::istream& is, std::string_view key) {
    std::string tok;
    if (!(is >> tok) || tok != key) {
        throw ValidationError("checkpoint: expected '" + std::string(key) + "', got '" + tok + "'");
    }
}

} // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
    const auto& topo = ck.network.topology();
    os << "gfs-checkpoint 1\n"
       << "scenario " << scenario_name(ck.scenario) << '\n'
       << "activation " << activation_name(topo.activation) << '\n'
       << "input_dim " << topo.input_dim << '\n'
       << "hidden_units " << topo.hidden_units << '\n'
       << "mask " << ck.mask << '\n'
       << "normalization " << (ck.normalization ? "zscore" : "none") << '\n';
    if (ck.normalization) {
        const auto& z = *ck.normalization;
        os << "zscore a mean ";
        detail::write_row(os, z.mean_a);
        os << "zscore a sd ";
        detail::write_row(os, z.sd_a);
        if (is_two_stream(ck.scenario)) {
            os << "zscore b mean ";
            detail::write_row(os, z.mean_b);
            os << "zscore b sd ";
            detail::write_row(os, z.sd_b);
        }
    }
    for (const auto& l : ck.network.parameters()) {
        os << "layer " << l.out_dim() << ' ' << l.in_dim() << '\n';
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) detail::write_row(os, l.weights.row(r));
        detail::write_row(os, l.biases);
    }
    os << "end\n";
}

inline Checkpoint read_checkpoint(std::istream& is) {
    using detail::expect;
    Checkpoint ck;
    std::string tok;
    expect(is, "gfs-checkpoint");
    if (!(is >> tok) || tok != "1") throw ValidationError("unsupported checkpoint version '" + tok + "'");
    expect(is, "scenario");
    is >> tok;
    ck.scenario = parse_scenario(tok);
    ModelTopology topo;
    topo.kind = is_two_stream(ck.scenario) ? TopologyKind::TwoStream : TopologyKind::SingleStream;
    expect(is, "activation");
    is >> tok;
    topo.activation = parse_activation(tok);
    expect(is, "input_dim");
    is >> topo.input_dim;
    expect(is, "hidden_units");
    is >> topo.hidden_units;
    expect(is, "mask");
    is >> ck.mask;
    if (!is || ck.mask.size() != kFeatureLength || ck.mask.find_first_not_of("01") != std::string::npos ||
        long(ck.selected_columns().size()) != topo.input_dim) {
        throw ValidationError("checkpoint mask is malformed or disagrees with input_dim");
    }
    expect(is, "normalization");
    is >> tok;
    if (tok == "zscore") {
        ZScore z;
        const auto d = topo.input_dim;
        auto read_pair = [&](std::string_view stream, Vector& mean, Vector& sd) {
            expect(is, "zscore");
            expect(is, stream);
            expect(is, "mean");
            mean = detail::read_values(is, d);
            expect(is, "zscore");
            expect(is, stream);
            expect(is, "sd");
            sd = detail::read_values(is, d);
        };
        read_pair("a", z.mean_a, z.sd_a);
        if (is_two_stream(ck.scenario)) read_pair("b", z.mean_b, z.sd_b);
        ck.normalization = std::move(z);
    } else if (tok != "none") {
        throw ValidationError("unknown normalization '" + tok + "'");
    }
    const std::size_t n_layers = topo.kind == TopologyKind::SingleStream ? 2 : 3;
    std::vector<LayerParams> layers;
    for (std::size_t i = 0; i < n_layers; ++i) {
        expect(is, "layer");
        long rows = 0, cols = 0;
        is >> rows >> cols;
        if (!is || rows <= 0 || cols <= 0) throw ValidationError("bad layer shape in checkpoint");
        LayerParams l = LayerParams::zeros(rows, cols);
        for (long r = 0; r < rows; ++r) l.weights.row(r) = detail::read_values(is, cols).transpose();
        l.biases = detail::read_values(is, rows);
        layers.push_back(std::move(l));
    }
    expect(is, "end");
    ck.network = Network(topo, std::move(layers));
    return ck;
}

} // namespace gfs
