#include "mlpforest/bench.hpp"

#include "mlpforest/errors.hpp"
#include "mlpforest/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace mlpforest {

namespace {

constexpr const char* kBaselineName = "baseline_mlp";

// Seed roles inside one (run seed, fold) cell.
constexpr std::uint64_t kRoleBaseline = 0;
constexpr std::uint64_t kRoleRawForest = 1;
constexpr std::uint64_t kRoleWhitenedForest = 2;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Re-throws with a context prefix while keeping the error category (type).
template <typename Fn>
auto with_context(const std::string& ctx, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const DimensionError& e) {
        throw DimensionError(ctx + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError(ctx + ": " + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(ctx + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(ctx + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(ctx + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
}

bool parse_bool(const std::string& value, const std::string& key) {
    std::string v = value;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("invalid boolean '" + value + "' for key '" + key + "'");
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        const std::string v = trim(value);
        // stoull would wrap a leading minus instead of failing.
        if (v.find('-') != std::string::npos) throw std::invalid_argument("negative");
        std::size_t pos = 0;
        const unsigned long long parsed = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return static_cast<std::uint64_t>(parsed);
    } catch (const std::exception&) {
        throw ConfigError("invalid integer '" + value + "' for key '" + key + "'");
    }
}

std::size_t parse_count(const std::string& value, const std::string& key) {
    return static_cast<std::size_t>(parse_u64(value, key));
}

double parse_real(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(trim(value), &pos);
        if (pos != trim(value).size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid number '" + value + "' for key '" + key + "'");
    }
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string item;
    std::stringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

char parse_delimiter(const std::string& value, const std::string& key) {
    if (value == "tab" || value == "\\t") return '\t';
    if (value.size() == 1) return value[0];
    throw ConfigError("invalid delimiter '" + value + "' for key '" + key +
                      "' (one character, or 'tab')");
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), m.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = m.row(indices[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

std::vector<int> take_labels(const std::vector<int>& y, std::span<const std::size_t> indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(y[i]);
    return out;
}

// Requested strategies, deduplicated, in canonical output order.
std::vector<StrategyKind> canonical_strategies(const RunConfig& cfg) {
    const StrategyKind order[] = {StrategyKind::MajorityVote, StrategyKind::Equiprobable,
                                  StrategyKind::WeightedProbability};
    std::vector<StrategyKind> out;
    for (StrategyKind kind : order) {
        if (std::find(cfg.strategies.begin(), cfg.strategies.end(), kind) !=
            cfg.strategies.end()) {
            out.push_back(kind);
        }
    }
    return out;
}

EvalReport eval_baseline(const MlpModel& model, const Matrix& xval, std::span<const int> yval,
                         std::size_t class_count) {
    std::vector<int> preds(xval.rows());
    for (std::size_t r = 0; r < xval.rows(); ++r) preds[r] = predict_label(model, xval.row(r));
    return make_report(confusion(yval, preds, class_count));
}

EvalReport eval_forest(const ForestModel& f, const Matrix& xval, std::span<const int> yval,
                       const DecisionStrategy& s) {
    std::vector<int> preds(xval.rows());
    for (std::size_t r = 0; r < xval.rows(); ++r) preds[r] = predict(f, xval.row(r), s).label;
    return make_report(confusion(yval, preds, f.class_count));
}

struct CellData {
    Matrix xtr;
    std::vector<int> ytr;
    Matrix xval;
    std::vector<int> yval;
};

CellData standardize_split(const Dataset& ds, const FoldSplit& split) {
    const Standardizer st = fit_standardizer(ds.features, split.train_indices);
    CellData d;
    d.xtr = apply_standardizer(st, take_rows(ds.features, split.train_indices));
    d.ytr = take_labels(ds.labels, split.train_indices);
    d.xval = apply_standardizer(st, take_rows(ds.features, split.validation_indices));
    d.yval = take_labels(ds.labels, split.validation_indices);
    return d;
}

bool wants_weighted(std::span<const StrategyKind> strategies) {
    return std::find(strategies.begin(), strategies.end(),
                     StrategyKind::WeightedProbability) != strategies.end();
}

// weighted_probability needs whitening eigenvalues, so it forces the run onto
// the whitened forest.
bool effective_whiten(const RunConfig& cfg, std::span<const StrategyKind> strategies) {
    return cfg.whiten || wants_weighted(strategies);
}

// All EvalReports for one (seed, fold) cell, in method_order.
std::vector<EvalReport> run_cell(const Dataset& ds, const RunConfig& cfg,
                                 std::span<const StrategyKind> strategies, std::uint64_t seed,
                                 const FoldSplit& split) {
    const CellData d = standardize_split(ds, split);
    const std::size_t classes = static_cast<std::size_t>(ds.class_count);
    const std::uint64_t cell_base = derive_seed(seed, split.fold_id + 1);

    std::vector<EvalReport> out;
    auto stamp = [&](EvalReport r, std::string method) {
        r.method = std::move(method);
        r.fold_id = split.fold_id;
        r.seed = seed;
        out.push_back(std::move(r));
    };

    if (cfg.include_baseline_mlp) {
        auto [model, hist] =
            train_mlp(d.xtr, d.ytr, classes, cfg.train, derive_seed(cell_base, kRoleBaseline));
        stamp(eval_baseline(model, d.xval, d.yval, classes), kBaselineName);
    }

    if (!strategies.empty()) {
        const bool whiten = effective_whiten(cfg, strategies);
        const ForestModel forest = train_forest(
            d.xtr, d.ytr, classes, cfg.train, whiten,
            derive_seed(cell_base, whiten ? kRoleWhitenedForest : kRoleRawForest),
            cfg.eigenvalue_floor);
        for (StrategyKind kind : strategies) {
            stamp(eval_forest(forest, d.xval, d.yval, DecisionStrategy{kind, cfg.vote_threshold}),
                  strategy_name(kind));
        }
    }
    return out;
}

double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double sample_stddev_of(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::ofstream open_for_write(const std::string& path) {
    try {
        const std::filesystem::path p(path);
        if (p.has_parent_path() && !p.parent_path().empty()) {
            std::filesystem::create_directories(p.parent_path());
        }
    } catch (const std::filesystem::filesystem_error& e) {
        throw IoError("cannot create directory for '" + path + "': " + e.what());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::string curse_line(const CurseReport& c) {
    std::string s = "# curse_condition satisfied=";
    s += c.satisfied ? "true" : "false";
    s += " lhs=" + format_double(c.lhs) + " rhs=" + format_double(c.rhs);
    return s;
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t t = threads != 0 ? threads
                                 : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    t = std::min(t, n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset") {
        cfg.dataset_path = value;
    } else if (key == "label-column") {
        cfg.label_column = value;
    } else if (key == "delimiter") {
        cfg.delimiter = parse_delimiter(value, key);
    } else if (key == "k-folds") {
        cfg.k_folds = parse_count(value, key);
    } else if (key == "seeds") {
        std::vector<std::uint64_t> seeds;
        for (const std::string& item : split_list(value)) seeds.push_back(parse_u64(item, key));
        if (seeds.empty()) throw ConfigError("key 'seeds' needs at least one value");
        cfg.seeds = std::move(seeds);
    } else if (key == "strategies") {
        std::vector<StrategyKind> kinds;
        for (const std::string& item : split_list(value)) kinds.push_back(strategy_from_name(item));
        cfg.strategies = std::move(kinds);
    } else if (key == "baseline") {
        cfg.include_baseline_mlp = parse_bool(value, key);
    } else if (key == "whiten") {
        cfg.whiten = parse_bool(value, key);
    } else if (key == "vote-threshold") {
        cfg.vote_threshold = parse_real(value, key);
    } else if (key == "eigenvalue-floor") {
        cfg.eigenvalue_floor = parse_real(value, key);
    } else if (key == "out-dir") {
        cfg.out_dir = value;
    } else if (key == "threads") {
        cfg.threads = parse_count(value, key);
    } else if (key == "curve-fold") {
        cfg.curve_fold = parse_count(value, key);
    } else if (key == "epochs") {
        cfg.train.epochs = parse_count(value, key);
    } else if (key == "batches-per-epoch") {
        cfg.train.batches_per_epoch = parse_count(value, key);
    } else if (key == "batch-size") {
        cfg.train.batch_size = parse_count(value, key);
    } else if (key == "hidden-size") {
        cfg.train.hidden_size = parse_count(value, key);
    } else if (key == "lr-initial") {
        cfg.train.lr_initial = parse_real(value, key);
    } else if (key == "lr-after-drop") {
        cfg.train.lr_after_drop = parse_real(value, key);
    } else if (key == "lr-drop-epoch") {
        cfg.train.lr_drop_epoch = parse_count(value, key);
    } else if (key == "patience") {
        cfg.train.early_stop_patience = parse_count(value, key);
    } else if (key == "holdout-fraction") {
        cfg.train.holdout_fraction = parse_real(value, key);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const std::size_t hash = line.find('#'); hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        }
        try {
            apply_config_entry(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::vector<std::string> method_order(const RunConfig& cfg) {
    std::vector<std::string> methods;
    if (cfg.include_baseline_mlp) methods.emplace_back(kBaselineName);
    for (StrategyKind kind : canonical_strategies(cfg)) methods.push_back(strategy_name(kind));
    return methods;
}

std::vector<MethodAggregate> aggregate_cells(const std::vector<EvalReport>& cells,
                                             const std::vector<std::string>& methods) {
    std::vector<MethodAggregate> out;
    out.reserve(methods.size());
    for (const std::string& method : methods) {
        MethodAggregate a;
        a.method = method;
        std::vector<double> f1s;
        std::vector<double> accs;
        for (const EvalReport& r : cells) {
            if (r.method != method) continue;
            f1s.push_back(r.weighted_f1);
            accs.push_back(r.accuracy);
        }
        a.cells = f1s.size();
        if (!f1s.empty()) {
            a.mean_f1 = mean_of(f1s);
            a.median_f1 = median_of(f1s);
            a.stddev_f1 = sample_stddev_of(f1s);
            a.mean_accuracy = mean_of(accs);
            a.median_accuracy = median_of(accs);
            a.stddev_accuracy = sample_stddev_of(accs);
        }
        out.push_back(std::move(a));
    }
    return out;
}

BenchmarkResult run_benchmark(const Dataset& ds, const RunConfig& cfg) {
    if (cfg.seeds.empty()) throw ConfigError("run_benchmark: seeds must be nonempty");
    if (cfg.k_folds < 2) throw ConfigError("run_benchmark: k-folds must be >= 2");
    const std::vector<std::string> methods = method_order(cfg);
    if (methods.empty()) {
        throw ConfigError("run_benchmark: nothing to evaluate (no strategies, no baseline)");
    }
    const std::vector<StrategyKind> strategies = canonical_strategies(cfg);

    BenchmarkResult result;
    result.samples = ds.features.rows();
    result.features = ds.features.cols();
    result.classes = ds.class_count;
    result.k_folds = cfg.k_folds;
    result.curse = curse_condition(static_cast<std::size_t>(ds.class_count),
                                   ds.features.cols(), ds.features.rows(), cfg.k_folds);
    if (!result.curse.satisfied) {
        result.notices.push_back(
            "warning: capacity check C^N < M/k does not hold (" + format_double(result.curse.lhs) +
            " >= " + format_double(result.curse.rhs) +
            "); the protocol is not forced into the data-starved regime (advisory only)");
    }
    if (wants_weighted(strategies) && !cfg.whiten) {
        result.notices.push_back(
            "notice: weighted_probability needs eigenvalue priors; whiten auto-forced to true "
            "for this run");
    }

    // Folds are per run seed; computed up front so failures carry seed context.
    const std::size_t k = cfg.k_folds;
    std::vector<std::vector<FoldSplit>> splits_by_seed;
    splits_by_seed.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) {
        splits_by_seed.push_back(with_context("seed=" + std::to_string(seed), [&] {
            return inverted_stratified_kfold(ds, k, seed);
        }));
    }

    const std::size_t n_cells = cfg.seeds.size() * k;
    std::vector<std::vector<EvalReport>> per_cell(n_cells);
    parallel_for(n_cells, cfg.threads, [&](std::size_t ci) {
        const std::size_t si = ci / k;
        const std::size_t fold = ci % k;
        const std::string ctx =
            "seed=" + std::to_string(cfg.seeds[si]) + " fold=" + std::to_string(fold);
        per_cell[ci] = with_context(ctx, [&] {
            return run_cell(ds, cfg, strategies, cfg.seeds[si], splits_by_seed[si][fold]);
        });
    });

    // Flatten method-major, then seed, then fold.
    result.cells.reserve(n_cells * methods.size());
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
            for (std::size_t fold = 0; fold < k; ++fold) {
                result.cells.push_back(per_cell[si * k + fold][mi]);
            }
        }
    }
    result.aggregates = aggregate_cells(result.cells, methods);
    return result;
}

void write_summary_csv(const BenchmarkResult& result, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << curse_line(result.curse) << "\n";
    out << "method,cells,mean_weighted_f1,median_weighted_f1,stddev_weighted_f1,"
           "mean_accuracy,median_accuracy,stddev_accuracy\n";
    for (const MethodAggregate& a : result.aggregates) {
        out << a.method << ',' << a.cells << ',' << format_double(a.mean_f1) << ','
            << format_double(a.median_f1) << ',' << format_double(a.stddev_f1) << ','
            << format_double(a.mean_accuracy) << ',' << format_double(a.median_accuracy) << ','
            << format_double(a.stddev_accuracy) << "\n";
    }
    finish_write(out, path);
}

void write_cells_csv(const BenchmarkResult& result, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << "method,seed,fold,weighted_f1,accuracy\n";
    for (const EvalReport& r : result.cells) {
        out << r.method << ',' << r.seed << ',' << r.fold_id << ','
            << format_double(r.weighted_f1) << ',' << format_double(r.accuracy) << "\n";
    }
    finish_write(out, path);
}

std::string render_summary(const BenchmarkResult& result) {
    std::string s;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "samples=%zu features=%zu classes=%d k_folds=%zu methods=%zu\n",
                  result.samples, result.features, result.classes, result.k_folds,
                  result.aggregates.size());
    s += buf;
    std::snprintf(buf, sizeof buf, "curse condition (C^N < M/k): lhs=%s rhs=%s -> %s\n",
                  format_double(result.curse.lhs).c_str(),
                  format_double(result.curse.rhs).c_str(),
                  result.curse.satisfied ? "satisfied" : "not satisfied");
    s += buf;
    for (const std::string& n : result.notices) s += n + "\n";
    s += "\n";
    std::snprintf(buf, sizeof buf, "%-22s %6s %9s %10s %10s %9s %11s %11s\n", "method", "cells",
                  "mean_f1", "median_f1", "stddev_f1", "mean_acc", "median_acc", "stddev_acc");
    s += buf;
    for (const MethodAggregate& a : result.aggregates) {
        std::snprintf(buf, sizeof buf, "%-22s %6zu %9.4f %10.4f %10.4f %9.4f %11.4f %11.4f\n",
                      a.method.c_str(), a.cells, a.mean_f1, a.median_f1, a.stddev_f1,
                      a.mean_accuracy, a.median_accuracy, a.stddev_accuracy);
        s += buf;
    }
    return s;
}

namespace {

double fused_accuracy(const ForestModel& f, const Matrix& x, std::span<const int> y,
                      const DecisionStrategy& s) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (predict(f, x.row(r), s).label == y[r]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(x.rows());
}

double model_accuracy(const MlpModel& m, const Matrix& x, std::span<const int> y) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (predict_label(m, x.row(r)) == y[r]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(x.rows());
}

void append_rows(CurveSet& cs, const std::string& method, const char* split,
                 std::span<const double> accs) {
    for (std::size_t e = 0; e < accs.size(); ++e) {
        cs.rows.push_back(CurveRow{e + 1, split, method, accs[e]});
    }
}

// Per-epoch fused accuracies for one forest/strategy pair. Members that
// stopped early contribute their final (best) weights past their last epoch.
void append_forest_curves(CurveSet& cs, const ForestModel& forest,
                          const std::vector<std::vector<MlpModel>>& member_snaps,
                          StrategyKind kind, double vote_threshold, const CellData& d) {
    std::size_t max_epochs = 0;
    for (const auto& snaps : member_snaps) max_epochs = std::max(max_epochs, snaps.size());

    const DecisionStrategy strat{kind, vote_threshold};
    std::vector<double> train_accs;
    std::vector<double> val_accs;
    train_accs.reserve(max_epochs);
    val_accs.reserve(max_epochs);

    ForestModel snapshot = forest;
    for (std::size_t e = 1; e <= max_epochs; ++e) {
        for (std::size_t j = 0; j < forest.member_count(); ++j) {
            snapshot.members[j] =
                e <= member_snaps[j].size() ? member_snaps[j][e - 1] : forest.members[j];
        }
        train_accs.push_back(fused_accuracy(snapshot, d.xtr, d.ytr, strat));
        val_accs.push_back(fused_accuracy(snapshot, d.xval, d.yval, strat));
    }
    append_rows(cs, strategy_name(kind), "train", train_accs);
    append_rows(cs, strategy_name(kind), "validation", val_accs);
}

} // namespace

std::vector<CurveSet> run_curves(const Dataset& ds, const RunConfig& cfg) {
    if (cfg.seeds.empty()) throw ConfigError("run_curves: seeds must be nonempty");
    if (cfg.curve_fold >= cfg.k_folds) {
        throw ConfigError("run_curves: curve-fold " + std::to_string(cfg.curve_fold) +
                          " out of range for k-folds " + std::to_string(cfg.k_folds));
    }
    const std::vector<StrategyKind> strategies = canonical_strategies(cfg);
    if (!cfg.include_baseline_mlp && strategies.empty()) {
        throw ConfigError("run_curves: nothing to evaluate (no strategies, no baseline)");
    }

    std::vector<CurveSet> curves(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t si) {
        const std::uint64_t seed = cfg.seeds[si];
        with_context("seed=" + std::to_string(seed), [&] {
            const std::vector<FoldSplit> splits = inverted_stratified_kfold(ds, cfg.k_folds, seed);
            const FoldSplit& split = splits[cfg.curve_fold];
            const CellData d = standardize_split(ds, split);
            const std::size_t classes = static_cast<std::size_t>(ds.class_count);
            const std::uint64_t cell_base = derive_seed(seed, split.fold_id + 1);

            CurveSet cs;
            cs.seed = seed;
            cs.fold_id = split.fold_id;

            if (cfg.include_baseline_mlp) {
                std::vector<MlpModel> snaps;
                auto observer = [&snaps](std::size_t, const MlpModel& m) { snaps.push_back(m); };
                train_mlp(d.xtr, d.ytr, classes, cfg.train, derive_seed(cell_base, kRoleBaseline),
                          observer);
                std::vector<double> train_accs;
                std::vector<double> val_accs;
                for (const MlpModel& m : snaps) {
                    train_accs.push_back(model_accuracy(m, d.xtr, d.ytr));
                    val_accs.push_back(model_accuracy(m, d.xval, d.yval));
                }
                append_rows(cs, kBaselineName, "train", train_accs);
                append_rows(cs, kBaselineName, "validation", val_accs);
            }

            if (!strategies.empty()) {
                const bool whiten = effective_whiten(cfg, strategies);
                std::vector<std::vector<MlpModel>> member_snaps(ds.features.cols());
                auto observer = [&member_snaps](std::size_t member, std::size_t,
                                                const MlpModel& m) {
                    member_snaps[member].push_back(m);
                };
                const ForestModel forest = train_forest(
                    d.xtr, d.ytr, classes, cfg.train, whiten,
                    derive_seed(cell_base, whiten ? kRoleWhitenedForest : kRoleRawForest),
                    cfg.eigenvalue_floor, observer);
                for (StrategyKind kind : strategies) {
                    append_forest_curves(cs, forest, member_snaps, kind, cfg.vote_threshold, d);
                }
            }
            curves[si] = std::move(cs);
        });
    });
    return curves;
}

void write_curves_csv(const std::vector<CurveSet>& curves, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << "epoch,split,method,accuracy\n";
    for (const CurveSet& cs : curves) {
        for (const CurveRow& r : cs.rows) {
            out << r.epoch << ',' << r.split << ',' << r.method << ','
                << format_double(r.accuracy) << "\n";
        }
    }
    finish_write(out, path);
}

Matrix read_feature_matrix(const std::string& path, char delimiter,
                           const std::vector<std::string>& feature_names,
                           const std::string& label_column) {
    const RawTable table = read_delimited(path, delimiter);
    const std::size_t n = feature_names.size();
    if (table.header.empty()) return Matrix(0, n); // zero-byte input

    std::vector<std::size_t> source_cols; // candidate feature columns, in file order
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] != label_column) source_cols.push_back(i);
    }

    // Align by name when both sides carry the same unique names; otherwise by
    // position (embedding tables often use generic or absent names).
    std::vector<std::size_t> slot_to_col;
    std::set<std::string> model_names(feature_names.begin(), feature_names.end());
    std::set<std::string> file_names;
    for (std::size_t c : source_cols) file_names.insert(table.header[c]);
    const bool unique_names =
        model_names.size() == n && file_names.size() == source_cols.size();
    if (unique_names && model_names == file_names) {
        slot_to_col.resize(n);
        for (std::size_t slot = 0; slot < n; ++slot) {
            for (std::size_t c : source_cols) {
                if (table.header[c] == feature_names[slot]) slot_to_col[slot] = c;
            }
        }
    } else if (source_cols.size() == n) {
        slot_to_col = source_cols;
    } else {
        throw DimensionError("input '" + path + "' has " + std::to_string(source_cols.size()) +
                             " feature columns, model expects " + std::to_string(n));
    }

    Matrix out(table.rows.size(), n);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t slot = 0; slot < n; ++slot) {
            const std::size_t c = slot_to_col[slot];
            out(r, slot) = parse_real_cell(table.rows[r][c], r + 2, table.header[c]);
        }
    }
    return out;
}

} // namespace mlpforest
