// mlpforest CLI: bench / curves / train / predict.
//
// bench and curves read settings from a key=value config file (--config) with
// command-line flags taking precedence; every key is listed in --help with its
// default. train and predict are flag-only utilities.

#include "mlpforest/bench.hpp"
#include "mlpforest/errors.hpp"
#include "mlpforest/serialize.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace {

using namespace mlpforest;

int report_error(const char* category, const std::exception& e) {
    std::cerr << "error [" << category << "]: " << e.what() << "\n";
    return 1;
}

int run_guarded(const std::function<void()>& fn) {
    try {
        fn();
        return 0;
    } catch (const DimensionError& e) {
        return report_error("dimension", e);
    } catch (const ArgumentError& e) {
        return report_error("argument", e);
    } catch (const ConvergenceError& e) {
        return report_error("convergence", e);
    } catch (const DataError& e) {
        return report_error("data", e);
    } catch (const IoError& e) {
        return report_error("io", e);
    } catch (const ConfigError& e) {
        return report_error("config", e);
    } catch (const std::exception& e) {
        return report_error("internal", e);
    }
}

// Every --key flag funnels its raw string through apply_config_entry, the
// same code path as config-file keys, so flag and file semantics cannot
// drift. Flags given on the command line override the file.
struct RunCliOptions {
    std::string config_path;
    CLI::Option* config_opt = nullptr;
    std::vector<std::pair<std::string, std::shared_ptr<std::string>>> values;
    std::vector<CLI::Option*> opts;
};

void add_run_options(CLI::App* app, RunCliOptions& o, bool with_curve_fold) {
    o.config_opt = app->add_option("--config", o.config_path,
                                   "key=value config file ('#' comments); flags override it");

    auto add_kv = [&](const std::string& key, const std::string& desc) {
        auto holder = std::make_shared<std::string>();
        CLI::Option* opt = app->add_option("--" + key, *holder, desc);
        o.values.emplace_back(key, holder);
        o.opts.push_back(opt);
        return opt;
    };
    auto add_bool = [&](const std::string& key, const std::string& desc) {
        auto holder = std::make_shared<std::string>();
        CLI::Option* opt = app->add_flag("--" + key + "{true},--no-" + key + "{false}", *holder,
                                         desc);
        o.values.emplace_back(key, holder);
        o.opts.push_back(opt);
        return opt;
    };

    add_kv("dataset", "path to the delimited dataset (required)");
    add_kv("label-column", "name of the label column (default: label)");
    add_kv("delimiter", "cell delimiter, one character or 'tab' (default: ,)");
    add_kv("k-folds", "number of folds; train on 1, validate on k-1 (default: 10)");
    add_kv("seeds", "comma-separated run seeds (default: 1,2,3,4,5)");
    add_kv("strategies",
           "comma-separated subset of majority_vote,equiprobable,weighted_probability "
           "(default: all three)");
    add_bool("baseline", "evaluate the full-feature single MLP baseline (default: true)");
    add_bool("whiten",
             "train the forest on whitened features; auto-forced to true when "
             "weighted_probability is requested (default: false)");
    add_kv("vote-threshold",
           "confidence a member needs to cast a vote, in (0,1) (default: 0.5)");
    add_kv("eigenvalue-floor", "lower clamp for whitening eigenvalues (default: 1e-8)");
    add_kv("out-dir", "directory for output files (default: out)");
    add_kv("threads", "worker threads; 0 means one per hardware thread (default: 0)");
    if (with_curve_fold) {
        add_kv("curve-fold", "fold index whose learning curves are recorded (default: 0)");
    }
    add_kv("epochs", "training epochs per network (default: 100)");
    add_kv("batches-per-epoch", "mini-batches drawn per epoch, with replacement (default: 200)");
    add_kv("batch-size", "mini-batch size; 0 means min(32, training rows) (default: 0)");
    add_kv("hidden-size", "hidden layer width (default: 100)");
    add_kv("lr-initial", "Adam learning rate before the drop (default: 0.001)");
    add_kv("lr-after-drop", "Adam learning rate after the drop (default: 0.0001)");
    add_kv("lr-drop-epoch", "last epoch on the initial learning rate (default: 50)");
    add_kv("patience", "early-stopping patience in epochs (default: 10)");
    add_kv("holdout-fraction",
           "stratified fraction held out for early stopping; 0 disables (default: 0.2)");
}

RunConfig build_run_config(const RunCliOptions& o) {
    RunConfig cfg;
    if (o.config_opt->count() > 0) load_config_file(cfg, o.config_path);
    for (std::size_t i = 0; i < o.values.size(); ++i) {
        if (o.opts[i]->count() > 0) {
            apply_config_entry(cfg, o.values[i].first, *o.values[i].second);
        }
    }
    if (cfg.dataset_path.empty()) {
        throw ConfigError("dataset is required (--dataset or config key 'dataset')");
    }
    return cfg;
}

void cmd_bench(const RunConfig& cfg) {
    const Dataset ds = load_csv(cfg.dataset_path, cfg.label_column, cfg.delimiter);
    const BenchmarkResult result = run_benchmark(ds, cfg);
    const std::filesystem::path dir(cfg.out_dir);
    const std::string summary_path = (dir / "summary.csv").string();
    const std::string cells_path = (dir / "cells.csv").string();
    write_summary_csv(result, summary_path);
    write_cells_csv(result, cells_path);
    std::cout << render_summary(result);
    std::cout << "\nwrote " << summary_path << "\n";
    std::cout << "wrote " << cells_path << " (" << result.cells.size() << " rows)\n";
}

void cmd_curves(const RunConfig& cfg) {
    const Dataset ds = load_csv(cfg.dataset_path, cfg.label_column, cfg.delimiter);
    const std::vector<CurveSet> curves = run_curves(ds, cfg);
    const std::string path = (std::filesystem::path(cfg.out_dir) / "curves.csv").string();
    write_curves_csv(curves, path);
    std::size_t rows = 0;
    for (const CurveSet& cs : curves) rows += cs.rows.size();
    std::cout << "wrote " << path << " (" << rows << " rows, " << curves.size()
              << " seed blocks, fold " << cfg.curve_fold << ")\n";
}

char parse_delim_flag(const std::string& s) {
    if (s == "tab" || s == "\\t") return '\t';
    if (s.size() == 1) return s[0];
    throw ConfigError("invalid delimiter '" + s + "' (one character, or 'tab')");
}

struct TrainCliOptions {
    std::string dataset;
    std::string label_column = "label";
    std::string delimiter = ",";
    std::string out_path = "forest.mlpf";
    std::uint64_t seed = 1;
    bool whiten = true;
    double eigenvalue_floor = 1e-8;
    TrainConfig train;
};

void cmd_train(const TrainCliOptions& o) {
    const Dataset ds = load_csv(o.dataset, o.label_column, parse_delim_flag(o.delimiter));

    std::vector<std::size_t> all_rows(ds.features.rows());
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    const Standardizer st = fit_standardizer(ds.features, all_rows);
    const Matrix x = apply_standardizer(st, ds.features);

    const ForestModel forest =
        train_forest(x, ds.labels, static_cast<std::size_t>(ds.class_count), o.train, o.whiten,
                     o.seed, o.eigenvalue_floor);

    ModelFile file{st, forest, o.label_column, ds.feature_names, ds.class_names};
    save_model(file, o.out_path);
    std::cout << "wrote " << o.out_path << " (" << forest.member_count() << " members, "
              << ds.feature_names.size() << " features, " << ds.class_count << " classes"
              << (o.whiten ? ", whitened" : "") << ")\n";
}

struct PredictCliOptions {
    std::string model_path;
    std::string input_path;
    std::string out_path = "predictions.csv";
    std::string strategy = "equiprobable";
    std::string delimiter = ",";
    double vote_threshold = 0.5;
};

void cmd_predict(const PredictCliOptions& o) {
    const ModelFile file = load_model(o.model_path);
    const Matrix raw = read_feature_matrix(o.input_path, parse_delim_flag(o.delimiter),
                                           file.feature_names, file.label_column);
    const Matrix x = apply_standardizer(file.standardizer, raw);
    const DecisionStrategy strat{strategy_from_name(o.strategy), o.vote_threshold};

    std::ofstream out(o.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + o.out_path + "' for writing");

    out << "row,predicted_label";
    if (strat.kind == StrategyKind::MajorityVote) {
        out << ",fallback_used";
    } else {
        for (const std::string& name : file.class_names) out << ",posterior_" << name;
    }
    out << "\n";
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const Decision d = predict(file.forest, x.row(r), strat);
        out << r << ',' << file.class_names.at(static_cast<std::size_t>(d.label));
        if (strat.kind == StrategyKind::MajorityVote) {
            out << ',' << (d.fallback_used ? "true" : "false");
        } else {
            for (double p : *d.posterior) out << ',' << format_double(p);
        }
        out << "\n";
    }
    out.flush();
    if (!out) throw IoError("write to '" + o.out_path + "' failed");
    std::cout << "wrote " << o.out_path << " (" << x.rows() << " rows)\n";
}

void add_train_config_options(CLI::App* app, TrainConfig& t) {
    app->add_option("--epochs", t.epochs, "training epochs per network")
        ->capture_default_str();
    app->add_option("--batches-per-epoch", t.batches_per_epoch,
                    "mini-batches drawn per epoch, with replacement")
        ->capture_default_str();
    app->add_option("--batch-size", t.batch_size,
                    "mini-batch size; 0 means min(32, training rows)")
        ->capture_default_str();
    app->add_option("--hidden-size", t.hidden_size, "hidden layer width")
        ->capture_default_str();
    app->add_option("--lr-initial", t.lr_initial, "Adam learning rate before the drop")
        ->capture_default_str();
    app->add_option("--lr-after-drop", t.lr_after_drop, "Adam learning rate after the drop")
        ->capture_default_str();
    app->add_option("--lr-drop-epoch", t.lr_drop_epoch, "last epoch on the initial rate")
        ->capture_default_str();
    app->add_option("--patience", t.early_stop_patience, "early-stopping patience in epochs")
        ->capture_default_str();
    app->add_option("--holdout-fraction", t.holdout_fraction,
                    "stratified fraction held out for early stopping; 0 disables")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-bagged MLP ensemble: inverted k-fold benchmark, learning curves, "
                 "model training and prediction"};
    app.require_subcommand(1);
    int exit_code = 0;

    CLI::App* bench = app.add_subcommand(
        "bench", "run the inverted k-fold benchmark; writes summary.csv and cells.csv");
    auto bench_opts = std::make_shared<RunCliOptions>();
    add_run_options(bench, *bench_opts, false);
    bench->callback([bench_opts, &exit_code] {
        exit_code = run_guarded([&] { cmd_bench(build_run_config(*bench_opts)); });
    });

    CLI::App* curves = app.add_subcommand(
        "curves", "record per-epoch train/validation accuracy on one fold; writes curves.csv");
    auto curves_opts = std::make_shared<RunCliOptions>();
    add_run_options(curves, *curves_opts, true);
    curves->callback([curves_opts, &exit_code] {
        exit_code = run_guarded([&] { cmd_curves(build_run_config(*curves_opts)); });
    });

    CLI::App* train = app.add_subcommand("train", "train a forest on a whole file and save it");
    auto train_opts = std::make_shared<TrainCliOptions>();
    train->add_option("--dataset", train_opts->dataset, "path to the delimited dataset")
        ->required();
    train->add_option("--label-column", train_opts->label_column, "name of the label column")
        ->capture_default_str();
    train->add_option("--delimiter", train_opts->delimiter,
                      "cell delimiter, one character or 'tab'")
        ->capture_default_str();
    train->add_option("--out", train_opts->out_path, "output model file")
        ->capture_default_str();
    train->add_option("--seed", train_opts->seed, "base seed for member training")
        ->capture_default_str();
    train->add_flag("--whiten,!--no-whiten", train_opts->whiten,
                    "train on whitened features so every strategy works at predict time "
                    "(default: true)");
    train->add_option("--eigenvalue-floor", train_opts->eigenvalue_floor,
                      "lower clamp for whitening eigenvalues")
        ->capture_default_str();
    add_train_config_options(train, train_opts->train);
    train->callback([train_opts, &exit_code] {
        exit_code = run_guarded([&] { cmd_train(*train_opts); });
    });

    CLI::App* predict = app.add_subcommand(
        "predict", "predict labels for a feature file with a saved model");
    auto predict_opts = std::make_shared<PredictCliOptions>();
    predict->add_option("--model", predict_opts->model_path, "saved model file")->required();
    predict->add_option("--input", predict_opts->input_path,
                        "delimited feature file; a label column matching the model's is ignored")
        ->required();
    predict->add_option("--out", predict_opts->out_path, "output predictions file")
        ->capture_default_str();
    predict->add_option("--strategy", predict_opts->strategy,
                        "majority_vote, equiprobable, or weighted_probability")
        ->capture_default_str();
    predict->add_option("--delimiter", predict_opts->delimiter,
                        "cell delimiter, one character or 'tab'")
        ->capture_default_str();
    predict->add_option("--vote-threshold", predict_opts->vote_threshold,
                        "confidence a member needs to cast a vote, in (0,1)")
        ->capture_default_str();
    predict->callback([predict_opts, &exit_code] {
        exit_code = run_guarded([&] { cmd_predict(*predict_opts); });
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return exit_code;
}
