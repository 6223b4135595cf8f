#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mlpforest {

// rows = true class, cols = predicted class
struct ConfusionMatrix {
    std::size_t class_count = 0;
    std::vector<std::int64_t> counts; // class_count x class_count, row-major

    std::int64_t at(std::size_t truth, std::size_t pred) const {
        return counts[truth * class_count + pred];
    }
    std::int64_t total() const;
    std::int64_t trace() const;
};

struct ClassStats {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct EvalReport {
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    std::vector<ClassStats> per_class;
    ConfusionMatrix confusion;
    std::string method;  // decision strategy or baseline name
    std::size_t fold_id = 0;
    std::uint64_t seed = 0;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t class_count);

// Support-weighted mean of per-class F1. A class scores 0 when
// precision + recall is 0; zero-support classes carry zero weight.
double weighted_f1(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

EvalReport make_report(const ConfusionMatrix& cm);

} // namespace mlpforest
