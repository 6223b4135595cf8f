#include "mlpforest/data.hpp"

#include "mlpforest/errors.hpp"
#include "mlpforest/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace mlpforest {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delimiter)) cells.push_back(cell);
    if (!line.empty() && line.back() == delimiter) cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

RawTable read_delimited(const std::string& path, char delimiter) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_delimited: cannot open '" + path + "'");

    RawTable table;
    std::string line;
    if (!std::getline(in, line)) return table; // empty file: empty header, no rows
    table.header = split_line(line, delimiter);
    for (auto& h : table.header) h = trim(h);

    std::size_t file_row = 1; // header was row 1
    while (std::getline(in, line)) {
        ++file_row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_line(line, delimiter);
        if (cells.size() != table.header.size()) {
            throw DataError("read_delimited: row " + std::to_string(file_row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

double parse_real_cell(const std::string& raw, std::size_t row, const std::string& column) {
    const std::string s = trim(raw);
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || s.empty()) {
        throw DataError("cannot parse '" + s + "' as a number (row " +
                        std::to_string(row) + ", column '" + column + "')");
    }
    if (!std::isfinite(value)) {
        throw DataError("non-finite value (row " + std::to_string(row) +
                        ", column '" + column + "')");
    }
    return value;
}

Dataset load_csv(const std::string& path, const std::string& label_column, char delimiter) {
    RawTable table = read_delimited(path, delimiter);
    const std::vector<std::string>& header = table.header;
    if (header.empty()) throw DataError("load_csv: '" + path + "' has no header row");

    std::size_t label_pos = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == label_column) label_pos = i;
    if (label_pos == header.size()) {
        throw DataError("load_csv: label column '" + label_column + "' not found in '" +
                        path + "'");
    }

    std::vector<std::string> feature_names;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != label_pos) feature_names.push_back(header[i]);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::vector<std::string>& cells = table.rows[r];
        std::vector<double> row;
        row.reserve(feature_names.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == label_pos) {
                raw_labels.push_back(trim(cells[i]));
            } else {
                row.push_back(parse_real_cell(cells[i], r + 2, header[i]));
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("load_csv: '" + path + "' has no data rows");

    // Dense label ids in sorted order of the distinct raw strings.
    std::map<std::string, int> label_map;
    for (const auto& s : raw_labels) label_map.emplace(s, 0);
    if (label_map.size() < 2) {
        throw DataError("load_csv: label column '" + label_column +
                        "' has fewer than two distinct values");
    }
    int next_id = 0;
    for (auto& [_, id] : label_map) id = next_id++;

    Dataset ds;
    ds.class_count = next_id;
    ds.feature_names = std::move(feature_names);
    ds.class_names.reserve(label_map.size());
    for (const auto& [name, _] : label_map) ds.class_names.push_back(name);
    ds.labels.reserve(raw_labels.size());
    for (const auto& s : raw_labels) ds.labels.push_back(label_map.at(s));
    ds.features = Matrix(rows.size(), ds.feature_names.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            ds.features(r, c) = rows[r][c];
    return ds;
}

Standardizer fit_standardizer(const Matrix& features, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ArgumentError("fit_standardizer: empty index list");
    const std::size_t n = features.cols();
    Standardizer s;
    s.means.assign(n, 0.0);
    s.stddevs.assign(n, 0.0);
    for (std::size_t idx : indices) {
        const auto row = features.row(idx);
        for (std::size_t c = 0; c < n; ++c) s.means[c] += row[c];
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (std::size_t c = 0; c < n; ++c) s.means[c] *= inv;
    for (std::size_t idx : indices) {
        const auto row = features.row(idx);
        for (std::size_t c = 0; c < n; ++c) {
            const double d = row[c] - s.means[c];
            s.stddevs[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < n; ++c) {
        s.stddevs[c] = std::sqrt(s.stddevs[c] * inv); // population stddev
        if (s.stddevs[c] < Standardizer::kStddevFloor) s.stddevs[c] = Standardizer::kStddevFloor;
    }
    return s;
}

Standardizer fit_standardizer(const Dataset& ds, std::span<const std::size_t> indices) {
    return fit_standardizer(ds.features, indices);
}

Matrix apply_standardizer(const Standardizer& s, const Matrix& features) {
    if (features.cols() != s.means.size()) {
        throw DimensionError("apply_standardizer: " + std::to_string(features.cols()) +
                             " columns vs " + std::to_string(s.means.size()) + " fitted");
    }
    Matrix out(features.rows(), features.cols());
    for (std::size_t r = 0; r < features.rows(); ++r)
        for (std::size_t c = 0; c < features.cols(); ++c)
            out(r, c) = (features(r, c) - s.means[c]) / s.stddevs[c];
    return out;
}

std::vector<FoldSplit> inverted_stratified_kfold(const Dataset& ds, std::size_t k,
                                                 std::uint64_t seed) {
    if (k < 2) throw ArgumentError("inverted_stratified_kfold: k must be >= 2");
    std::vector<std::vector<std::size_t>> by_class(ds.class_count);
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        by_class[ds.labels[i]].push_back(i);
    for (int c = 0; c < ds.class_count; ++c) {
        if (by_class[c].size() < k) {
            throw DataError("inverted_stratified_kfold: class '" + ds.class_names[c] +
                            "' has " + std::to_string(by_class[c].size()) +
                            " samples, fewer than k=" + std::to_string(k));
        }
    }

    // Shuffle within each class, then deal round-robin into k folds.
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(k);
    for (int c = 0; c < ds.class_count; ++c) {
        rng.shuffle(by_class[c]);
        for (std::size_t i = 0; i < by_class[c].size(); ++i)
            folds[i % k].push_back(by_class[c][i]);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());

    std::vector<FoldSplit> splits(k);
    for (std::size_t f = 0; f < k; ++f) {
        splits[f].fold_id = f;
        splits[f].k = k;
        splits[f].train_indices = folds[f];
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            splits[f].validation_indices.insert(splits[f].validation_indices.end(),
                                                folds[g].begin(), folds[g].end());
        }
        std::sort(splits[f].validation_indices.begin(), splits[f].validation_indices.end());
    }
    return splits;
}

CurseReport curse_condition(std::size_t classes, std::size_t features,
                            std::size_t samples, std::size_t folds) {
    if (classes < 1 || features < 1 || samples < 1 || folds < 1) {
        throw ArgumentError("curse_condition: all inputs must be >= 1");
    }
    CurseReport report;
    report.lhs = std::pow(static_cast<double>(classes), static_cast<double>(features));
    if (!std::isfinite(report.lhs)) {
        report.lhs = std::numeric_limits<double>::infinity();
    }
    report.rhs = static_cast<double>(samples) / static_cast<double>(folds);
    report.satisfied = report.lhs < report.rhs;
    return report;
}

} // namespace mlpforest
