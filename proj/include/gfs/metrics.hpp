#pragma once

/// @file metrics.hpp
/// @brief Confusion matrix, per-class precision/recall/F1 and macro averages.
///
/// All reported values are percentages. A metric whose denominator is zero is
/// undefined (std::nullopt), renders as "n/a" and is left out of macro means.

#include <array>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "data.hpp"
#include "error.hpp"

namespace gfs {

/// counts[actual][predicted], class order {genuine, posed}.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 2>, 2> counts{};

    std::size_t total() const noexcept {
        return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
    }
    std::size_t correct() const noexcept { return counts[0][0] + counts[1][1]; }

    bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const Label> preds, std::span<const Label> truth) {
    if (preds.size() != truth.size()) {
        throw ValidationError("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                              std::to_string(truth.size()) + " labels");
    }
    if (preds.empty()) throw ValidationError("confusion: no samples");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) ++cm.counts[int(truth[i])][int(preds[i])];
    return cm;
}

using Metric = std::optional<double>;

struct ClassMetrics {
    Metric precision;
    Metric recall;
    Metric f1;
};

struct EvalReport {
    double accuracy = 0.0;
    std::array<ClassMetrics, 2> per_class{};
    ClassMetrics macro{};
};

/// Harmonic mean, in the same units as its inputs.
inline Metric f1_score(Metric precision, Metric recall) {
    if (!precision || !recall || *precision + *recall == 0.0) return std::nullopt;
    return 2.0 * *precision * *recall / (*precision + *recall);
}

/// Unweighted mean over the defined values.
inline Metric macro_mean(Metric a, Metric b) {
    if (a && b) return (*a + *b) / 2.0;
    if (a) return a;
    return b;
}

inline EvalReport report(const ConfusionMatrix& cm) {
    EvalReport r;
    if (cm.total() == 0) throw ValidationError("report: empty confusion matrix");
    r.accuracy = 100.0 * double(cm.correct()) / double(cm.total());
    for (int c = 0; c < 2; ++c) {
        const double tp = double(cm.counts[c][c]);
        const double fp = double(cm.counts[1 - c][c]);
        const double fn = double(cm.counts[c][1 - c]);
        auto& m = r.per_class[c];
        if (tp + fp > 0) m.precision = 100.0 * tp / (tp + fp);
        if (tp + fn > 0) m.recall = 100.0 * tp / (tp + fn);
        m.f1 = f1_score(m.precision, m.recall);
    }
    r.macro.precision = macro_mean(r.per_class[0].precision, r.per_class[1].precision);
    r.macro.recall = macro_mean(r.per_class[0].recall, r.per_class[1].recall);
    r.macro.f1 = macro_mean(r.per_class[0].f1, r.per_class[1].f1);
    return r;
}

inline std::string format_metric(Metric m) {
    if (!m) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *m);
    return buf;
}

/// Aligned table: one row per metric, columns Genuine, Posed, Average.
inline void print_table(std::ostream& os, const EvalReport& r) {
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %9s %9s %9s\n", "Metric", "Genuine", "Posed", "Average");
    os << line;
    auto row = [&](const char* name, Metric ClassMetrics::*field) {
        std::snprintf(line, sizeof line, "%-10s %9s %9s %9s\n", name, format_metric(r.per_class[0].*field).c_str(),
                      format_metric(r.per_class[1].*field).c_str(), format_metric(r.macro.*field).c_str());
        os << line;
    };
    row("Precision", &ClassMetrics::precision);
    row("Recall", &ClassMetrics::recall);
    row("F1 score", &ClassMetrics::f1);
    os << "Accuracy: " << format_metric(r.accuracy) << " %\n";
}

inline void write_report_csv(std::ostream& os, const EvalReport& r) {
    os << "metric,genuine,posed,average\n";
    auto row = [&](const char* name, Metric ClassMetrics::*field) {
        os << name << ',' << format_metric(r.per_class[0].*field) << ',' << format_metric(r.per_class[1].*field)
           << ',' << format_metric(r.macro.*field) << '\n';
    };
    row("precision", &ClassMetrics::precision);
    row("recall", &ClassMetrics::recall);
    row("f1", &ClassMetrics::f1);
    os << "accuracy,,," << format_metric(r.accuracy) << '\n';
}

} // namespace gfs
