// Benchmark harness: runs the inverted k-fold protocol over a seed list,
// evaluates the baseline network and the requested fusion strategies on every
// (seed, fold) cell, and aggregates the scores per method.
//
// Whitening semantics: one forest per cell. With `whiten = false` it is
// trained on standardized features as-is; with `whiten = true` on whitened
// features. weighted_probability needs the whitening eigenvalues for its
// priors, so requesting it auto-forces whiten to true for the whole run and
// records a notice. The baseline MLP always trains on the standardized
// (unwhitened) full feature set.
//
// Every cell derives its RNG seeds from (run seed, fold, role), so results do
// not depend on scheduling order or thread count.
#pragma once

#include "mlpforest/data.hpp"
#include "mlpforest/decision.hpp"
#include "mlpforest/forest.hpp"
#include "mlpforest/metrics.hpp"
#include "mlpforest/mlp.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mlpforest {

struct RunConfig {
    std::string dataset_path;
    std::string label_column = "label";
    char delimiter = ',';

    std::size_t k_folds = 10;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<StrategyKind> strategies = {StrategyKind::MajorityVote,
                                            StrategyKind::Equiprobable,
                                            StrategyKind::WeightedProbability};
    bool include_baseline_mlp = true;
    bool whiten = false;
    double vote_threshold = 0.5;
    double eigenvalue_floor = 1e-8;
    TrainConfig train;

    std::string out_dir = "out";
    std::size_t threads = 0;    // 0: one worker per hardware thread
    std::size_t curve_fold = 0; // fold used by run_curves
};

// Applies a single `key=value` setting to `cfg`; unknown keys are a
// ConfigError. Keys match the CLI flag names (see tools/main.cpp).
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Reads a key=value file ('#' starts a comment, blank lines ignored) into cfg.
void load_config_file(RunConfig& cfg, const std::string& path);

struct MethodAggregate {
    std::string method;
    std::size_t cells = 0;
    double mean_f1 = 0.0;
    double median_f1 = 0.0;
    double stddev_f1 = 0.0; // sample stddev, 0 when cells < 2
    double mean_accuracy = 0.0;
    double median_accuracy = 0.0;
    double stddev_accuracy = 0.0;
};

struct BenchmarkResult {
    // One report per (method, seed, fold), method-major then seed then fold.
    std::vector<EvalReport> cells;
    std::vector<MethodAggregate> aggregates; // same method order as cells
    CurseReport curse;
    std::size_t samples = 0;
    std::size_t features = 0;
    int classes = 0;
    std::size_t k_folds = 0;
    std::vector<std::string> notices;
};

// Method names in output order for a config (baseline first when included,
// then the requested strategies in canonical order).
std::vector<std::string> method_order(const RunConfig& cfg);

BenchmarkResult run_benchmark(const Dataset& ds, const RunConfig& cfg);

// Aggregate a flat cell list (exposed so reports can be recomputed from a
// cells.csv round-trip).
std::vector<MethodAggregate> aggregate_cells(const std::vector<EvalReport>& cells,
                                             const std::vector<std::string>& methods);

// summary.csv: '#'-prefixed curse line, then one aggregate row per method.
void write_summary_csv(const BenchmarkResult& result, const std::string& path);

// cells.csv: header `method,seed,fold,weighted_f1,accuracy`.
void write_cells_csv(const BenchmarkResult& result, const std::string& path);

// Human-readable table with the curse condition and any notices.
std::string render_summary(const BenchmarkResult& result);

// Learning curves at one fold: per-epoch accuracy on the training fold and on
// the validation folds, for the baseline and each requested fusion strategy.
// A member that stopped early contributes its final (restored) weights to
// ensemble snapshots for later epochs.
struct CurveRow {
    std::size_t epoch = 0; // 1-indexed
    std::string split;     // "train" or "validation"
    std::string method;
    double accuracy = 0.0;
};

struct CurveSet {
    std::uint64_t seed = 0;
    std::size_t fold_id = 0;
    std::vector<CurveRow> rows;
};

std::vector<CurveSet> run_curves(const Dataset& ds, const RunConfig& cfg);

// curves.csv: header `epoch,split,method,accuracy`; seed blocks concatenated
// in config order (a reset of the epoch column marks each block boundary).
void write_curves_csv(const std::vector<CurveSet>& curves, const std::string& path);

// Feature matrix for prediction input: a header-only or empty file yields a
// 0-row matrix; a stored label column is dropped; columns align to
// `feature_names` by name when all names match, otherwise by position.
Matrix read_feature_matrix(const std::string& path, char delimiter,
                           const std::vector<std::string>& feature_names,
                           const std::string& label_column);

// Runs fn(0..n-1) across a fixed-size thread pool. The work must not depend
// on execution order; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

// "%.10g" rendering used by every CSV writer, locale-independent.
std::string format_double(double value);

} // namespace mlpforest
