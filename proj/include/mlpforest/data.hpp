#pragma once

// Dataset ingestion and the inverted cross-validation protocol: split the
// data into k stratified folds, train on ONE fold and validate on the other
// k-1, so that the training set is deliberately starved.

#include "mlpforest/linalg.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mlpforest {

struct Dataset {
    Matrix features;                        // M samples x N features
    std::vector<int> labels;                // length M, values in [0, class_count)
    int class_count = 0;
    std::vector<std::string> feature_names; // length N, file order
    std::vector<std::string> class_names;   // length class_count, sorted raw labels

    std::size_t sample_count() const { return features.rows(); }
    std::size_t feature_count() const { return features.cols(); }
};

struct FoldSplit {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> validation_indices;
    std::size_t fold_id = 0;
    std::size_t k = 0;
};

// Per-feature mean and population standard deviation, fitted on a row subset.
// Degenerate columns get their stddev floored so the transform stays finite.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stddevs;

    static constexpr double kStddevFloor = 1e-8;
};

struct CurseReport {
    bool satisfied = false; // whether classes^features < samples/folds
    double lhs = 0.0;
    double rhs = 0.0;
};

// Unparsed delimited text. Empty files yield an empty header and no rows.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

RawTable read_delimited(const std::string& path, char delimiter);

// Parses one cell as a finite real; `row` and `column` feed the error message.
double parse_real_cell(const std::string& raw, std::size_t row, const std::string& column);

// Reads a delimited text file with a header row. Every column except
// `label_column` must parse as a real number. Raw label strings are mapped to
// dense integers 0..C-1 in sorted order, so the mapping is deterministic
// without a schema file.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 char delimiter = ',');

Standardizer fit_standardizer(const Matrix& features, std::span<const std::size_t> indices);
Standardizer fit_standardizer(const Dataset& ds, std::span<const std::size_t> indices);

Matrix apply_standardizer(const Standardizer& s, const Matrix& features);

// k splits, each training on fold i and validating on the remaining k-1.
// Stratified: indices are shuffled per class with a seeded generator and
// dealt round-robin into folds; per-class fold counts differ by at most one.
// Every class needs at least k samples.
std::vector<FoldSplit> inverted_stratified_kfold(const Dataset& ds, std::size_t k,
                                                 std::uint64_t seed);

// Advisory check of classes^features < samples/folds. Never gates execution;
// the benchmark only prints a warning when the run is outside the
// data-starved regime. Overflowing lhs is reported as +infinity.
CurseReport curse_condition(std::size_t classes, std::size_t features,
                            std::size_t samples, std::size_t folds);

} // namespace mlpforest
