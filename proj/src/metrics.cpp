#include "mlpforest/metrics.hpp"

#include "mlpforest/errors.hpp"

#include <numeric>
#include <string>

namespace mlpforest {

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t t = 0;
    for (std::size_t c = 0; c < class_count; ++c) t += at(c, c);
    return t;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t class_count) {
    if (y_true.size() != y_pred.size()) {
        throw DimensionError("confusion: " + std::to_string(y_true.size()) + " true vs " +
                             std::to_string(y_pred.size()) + " predicted labels");
    }
    ConfusionMatrix cm;
    cm.class_count = class_count;
    cm.counts.assign(class_count * class_count, 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || static_cast<std::size_t>(t) >= class_count ||
            p < 0 || static_cast<std::size_t>(p) >= class_count) {
            throw ArgumentError("confusion: label out of range at pair " + std::to_string(i));
        }
        ++cm.counts[static_cast<std::size_t>(t) * class_count + static_cast<std::size_t>(p)];
    }
    return cm;
}

namespace {

std::vector<ClassStats> per_class_stats(const ConfusionMatrix& cm) {
    std::vector<ClassStats> stats(cm.class_count);
    for (std::size_t c = 0; c < cm.class_count; ++c) {
        std::int64_t row_sum = 0;
        std::int64_t col_sum = 0;
        for (std::size_t k = 0; k < cm.class_count; ++k) {
            row_sum += cm.at(c, k);
            col_sum += cm.at(k, c);
        }
        const double tp = static_cast<double>(cm.at(c, c));
        ClassStats& s = stats[c];
        s.support = row_sum;
        s.precision = col_sum > 0 ? tp / static_cast<double>(col_sum) : 0.0;
        s.recall = row_sum > 0 ? tp / static_cast<double>(row_sum) : 0.0;
        const double pr = s.precision + s.recall;
        s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
    }
    return stats;
}

} // namespace

double weighted_f1(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total <= 0) throw ArgumentError("weighted_f1: empty confusion matrix");
    const std::vector<ClassStats> stats = per_class_stats(cm);
    double sum = 0.0;
    for (const ClassStats& s : stats) sum += static_cast<double>(s.support) * s.f1;
    return sum / static_cast<double>(total);
}

double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total <= 0) throw ArgumentError("accuracy: empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

EvalReport make_report(const ConfusionMatrix& cm) {
    EvalReport report;
    report.confusion = cm;
    report.per_class = per_class_stats(cm);
    report.weighted_f1 = weighted_f1(cm);
    report.accuracy = accuracy(cm);
    return report;
}

} // namespace mlpforest
