#pragma once

#include <stdexcept>
#include <string>

namespace mlpforest {

// Shape or size mismatch between operands.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid argument value (non-symmetric input, bad threshold, ...).
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// An iterative solver ran out of its iteration budget.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or degenerate input data (CSV parse failures, single-class
// datasets, infeasible stratification).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// File system and serialization failures, including model version mismatches.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent run configuration (e.g., a strategy that needs a whitened
// forest applied to a raw one).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace mlpforest
