#include "mlpforest/bench.hpp"

#include "mlpforest/data.hpp"
#include "mlpforest/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace mlpforest;

namespace {

namespace fs = std::filesystem;

const std::string kIrisPath = std::string(MLPFOREST_DATA_DIR) + "/iris.csv";

struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& stem) {
        path = fs::temp_directory_path() / (stem + "." + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out << text;
}

// Small but real: 2 seeds x 5 folds on iris with a tiny network.
RunConfig fast_iris_config() {
    RunConfig cfg;
    cfg.dataset_path = kIrisPath;
    cfg.label_column = "species";
    cfg.k_folds = 5;
    cfg.seeds = {1, 2};
    cfg.train.epochs = 3;
    cfg.train.batches_per_epoch = 8;
    cfg.train.hidden_size = 8;
    cfg.threads = 1;
    return cfg;
}

EvalReport cell_of(const std::string& method, std::uint64_t seed, std::size_t fold,
                   double f1, double acc) {
    EvalReport r;
    r.method = method;
    r.seed = seed;
    r.fold_id = fold;
    r.weighted_f1 = f1;
    r.accuracy = acc;
    return r;
}

bool has_notice(const std::vector<std::string>& notices, const std::string& needle) {
    return std::any_of(notices.begin(), notices.end(), [&](const std::string& n) {
        return n.find(needle) != std::string::npos;
    });
}

} // namespace

TEST_SUITE("bench") {

TEST_CASE("apply_config_entry covers every documented key") {
    RunConfig cfg;
    apply_config_entry(cfg, "dataset", "some/where.csv");
    apply_config_entry(cfg, "label-column", "target");
    apply_config_entry(cfg, "delimiter", "tab");
    apply_config_entry(cfg, "k-folds", "7");
    apply_config_entry(cfg, "seeds", "11,12,13");
    apply_config_entry(cfg, "strategies", "vote,weighted");
    apply_config_entry(cfg, "baseline", "false");
    apply_config_entry(cfg, "whiten", "true");
    apply_config_entry(cfg, "vote-threshold", "0.6");
    apply_config_entry(cfg, "eigenvalue-floor", "1e-6");
    apply_config_entry(cfg, "out-dir", "results");
    apply_config_entry(cfg, "threads", "3");
    apply_config_entry(cfg, "curve-fold", "2");
    apply_config_entry(cfg, "epochs", "77");
    apply_config_entry(cfg, "batches-per-epoch", "50");
    apply_config_entry(cfg, "batch-size", "16");
    apply_config_entry(cfg, "hidden-size", "42");
    apply_config_entry(cfg, "lr-initial", "0.01");
    apply_config_entry(cfg, "lr-after-drop", "0.001");
    apply_config_entry(cfg, "lr-drop-epoch", "30");
    apply_config_entry(cfg, "patience", "5");
    apply_config_entry(cfg, "holdout-fraction", "0.25");

    CHECK(cfg.dataset_path == "some/where.csv");
    CHECK(cfg.label_column == "target");
    CHECK(cfg.delimiter == '\t');
    CHECK(cfg.k_folds == 7);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{11, 12, 13});
    REQUIRE(cfg.strategies.size() == 2);
    CHECK(cfg.strategies[0] == StrategyKind::MajorityVote);
    CHECK(cfg.strategies[1] == StrategyKind::WeightedProbability);
    CHECK_FALSE(cfg.include_baseline_mlp);
    CHECK(cfg.whiten);
    CHECK(cfg.vote_threshold == 0.6);
    CHECK(cfg.eigenvalue_floor == 1e-6);
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.threads == 3);
    CHECK(cfg.curve_fold == 2);
    CHECK(cfg.train.epochs == 77);
    CHECK(cfg.train.batches_per_epoch == 50);
    CHECK(cfg.train.batch_size == 16);
    CHECK(cfg.train.hidden_size == 42);
    CHECK(cfg.train.lr_initial == 0.01);
    CHECK(cfg.train.lr_after_drop == 0.001);
    CHECK(cfg.train.lr_drop_epoch == 30);
    CHECK(cfg.train.early_stop_patience == 5);
    CHECK(cfg.train.holdout_fraction == 0.25);
}

TEST_CASE("apply_config_entry rejects bad input by key") {
    RunConfig cfg;
    CHECK_THROWS_WITH_AS(apply_config_entry(cfg, "sneeds", "1"),
                         doctest::Contains("unknown config key 'sneeds'"), ConfigError);
    CHECK_THROWS_WITH_AS(apply_config_entry(cfg, "k-folds", "many"),
                         doctest::Contains("k-folds"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "whiten", "perhaps"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "seeds", ""), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "strategies", "bagging"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "vote-threshold", "high"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "delimiter", "ab"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "epochs", "-3"), ConfigError);
}

TEST_CASE("load_config_file parses comments and reports line numbers") {
    TempDir dir("bench-config");
    const std::string path = dir.file("run.conf");
    spit(path,
         "# benchmark settings\n"
         "k-folds = 4\n"
         "\n"
         "seeds = 9,10   # trailing comment\n"
         "strategies=equiprobable\n");
    RunConfig cfg;
    load_config_file(cfg, path);
    CHECK(cfg.k_folds == 4);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{9, 10});
    REQUIRE(cfg.strategies.size() == 1);
    CHECK(cfg.strategies[0] == StrategyKind::Equiprobable);

    spit(path, "k-folds = 4\nnot a setting\n");
    CHECK_THROWS_WITH_AS(load_config_file(cfg, path), doctest::Contains(":2:"), ConfigError);

    spit(path, "k-folds = banana\n");
    CHECK_THROWS_WITH_AS(load_config_file(cfg, path), doctest::Contains(":1:"), ConfigError);

    CHECK_THROWS_AS(load_config_file(cfg, dir.file("missing.conf")), IoError);
}

TEST_CASE("method order is baseline first then canonical strategies") {
    RunConfig cfg;
    CHECK(method_order(cfg) ==
          std::vector<std::string>{"baseline_mlp", "majority_vote", "equiprobable",
                                   "weighted_probability"});

    cfg.include_baseline_mlp = false;
    apply_config_entry(cfg, "strategies", "weighted,vote,vote"); // duplicates collapse
    CHECK(method_order(cfg) ==
          std::vector<std::string>{"majority_vote", "weighted_probability"});
}

TEST_CASE("aggregate_cells matches hand-computed statistics") {
    std::vector<EvalReport> cells;
    cells.push_back(cell_of("m", 1, 0, 0.5, 0.6));
    cells.push_back(cell_of("m", 1, 1, 0.7, 0.8));
    cells.push_back(cell_of("m", 2, 0, 0.9, 1.0));
    cells.push_back(cell_of("other", 1, 0, 0.1, 0.2));

    const auto aggs = aggregate_cells(cells, {"m", "other", "absent"});
    REQUIRE(aggs.size() == 3);

    CHECK(aggs[0].method == "m");
    CHECK(aggs[0].cells == 3);
    CHECK(aggs[0].mean_f1 == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(aggs[0].median_f1 == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(aggs[0].stddev_f1 == doctest::Approx(0.2).epsilon(1e-12)); // sample stddev
    CHECK(aggs[0].mean_accuracy == doctest::Approx(0.8).epsilon(1e-12));

    CHECK(aggs[1].cells == 1);
    CHECK(aggs[1].stddev_f1 == 0.0); // undefined below 2 cells, reported as 0
    CHECK(aggs[2].cells == 0);

    // Even-count median is the midpoint of the two central values.
    cells.push_back(cell_of("m", 2, 1, 0.1, 0.0));
    const auto even = aggregate_cells(cells, {"m"});
    CHECK(even[0].median_f1 == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("run_benchmark produces the full method-major cell grid") {
    const Dataset ds = load_csv(kIrisPath, "species", ',');
    const RunConfig cfg = fast_iris_config();
    const BenchmarkResult result = run_benchmark(ds, cfg);

    const std::vector<std::string> methods = method_order(cfg);
    REQUIRE(methods.size() == 4);
    REQUIRE(result.cells.size() == methods.size() * 2 * 5);

    std::size_t i = 0;
    for (const std::string& method : methods) {
        for (std::uint64_t seed : cfg.seeds) {
            for (std::size_t fold = 0; fold < 5; ++fold) {
                const EvalReport& r = result.cells[i++];
                CHECK(r.method == method);
                CHECK(r.seed == seed);
                CHECK(r.fold_id == fold);
                CHECK(r.weighted_f1 >= 0.0);
                CHECK(r.weighted_f1 <= 1.0);
                CHECK(r.accuracy >= 0.0);
                CHECK(r.accuracy <= 1.0);
                // Validation rows = everything outside the training fold.
                CHECK(r.confusion.total() == 150 - 30);
            }
        }
    }

    CHECK(result.samples == 150);
    CHECK(result.features == 4);
    CHECK(result.classes == 3);
    CHECK(result.k_folds == 5);

    // 3^4 = 81 >= 150/5 = 30: the capacity condition fails on iris at k=5.
    CHECK_FALSE(result.curse.satisfied);
    CHECK(result.curse.lhs == 81.0);
    CHECK(result.curse.rhs == 30.0);
    CHECK(has_notice(result.notices, "capacity check"));

    // weighted_probability was requested with whiten=false.
    CHECK(has_notice(result.notices, "auto-forced"));

    // Aggregates are recomputable from the flat cell list.
    const auto again = aggregate_cells(result.cells, methods);
    REQUIRE(again.size() == result.aggregates.size());
    for (std::size_t a = 0; a < again.size(); ++a) {
        CHECK(again[a].method == result.aggregates[a].method);
        CHECK(again[a].cells == result.aggregates[a].cells);
        CHECK(again[a].mean_f1 == result.aggregates[a].mean_f1);
        CHECK(again[a].median_f1 == result.aggregates[a].median_f1);
        CHECK(again[a].stddev_f1 == result.aggregates[a].stddev_f1);
        CHECK(again[a].mean_accuracy == result.aggregates[a].mean_accuracy);
    }

    // No auto-force notice when whitening was requested explicitly.
    RunConfig explicit_whiten = cfg;
    explicit_whiten.whiten = true;
    explicit_whiten.seeds = {1};
    explicit_whiten.k_folds = 2;
    const BenchmarkResult r2 = run_benchmark(ds, explicit_whiten);
    CHECK_FALSE(has_notice(r2.notices, "auto-forced"));
}

TEST_CASE("csv outputs are byte-identical across reruns and thread counts") {
    const Dataset ds = load_csv(kIrisPath, "species", ',');
    TempDir dir("bench-determinism");

    RunConfig cfg = fast_iris_config();
    cfg.k_folds = 3;
    cfg.seeds = {1};

    std::vector<std::string> outputs;
    for (int run = 0; run < 3; ++run) {
        cfg.threads = run == 2 ? 4 : 1; // third run exercises the thread pool
        const BenchmarkResult result = run_benchmark(ds, cfg);
        const std::string tag = std::to_string(run);
        write_summary_csv(result, dir.file("summary" + tag + ".csv"));
        write_cells_csv(result, dir.file("cells" + tag + ".csv"));
        outputs.push_back(slurp(dir.file("summary" + tag + ".csv")) + "|" +
                          slurp(dir.file("cells" + tag + ".csv")));
    }
    CHECK(outputs[0] == outputs[1]);
    CHECK(outputs[0] == outputs[2]);

    const std::string summary = slurp(dir.file("summary0.csv"));
    CHECK(summary.rfind("# curse_condition satisfied=false lhs=81 rhs=50", 0) == 0);
    CHECK(summary.find("method,cells,mean_weighted_f1,median_weighted_f1,stddev_weighted_f1,"
                       "mean_accuracy,median_accuracy,stddev_accuracy") != std::string::npos);

    const std::string cells = slurp(dir.file("cells0.csv"));
    CHECK(cells.rfind("method,seed,fold,weighted_f1,accuracy\n", 0) == 0);
    CHECK(cells.find("\nbaseline_mlp,1,0,") != std::string::npos);
    CHECK(std::count(cells.begin(), cells.end(), '\n') == 1 + 4 * 3);

    const std::string rendered = render_summary(run_benchmark(ds, cfg));
    CHECK(rendered.find("curse condition") != std::string::npos);
    CHECK(rendered.find("baseline_mlp") != std::string::npos);
    CHECK(rendered.find("weighted_probability") != std::string::npos);
}

TEST_CASE("run_benchmark validates its configuration") {
    const Dataset ds = load_csv(kIrisPath, "species", ',');
    RunConfig cfg = fast_iris_config();
    cfg.seeds.clear();
    CHECK_THROWS_AS(run_benchmark(ds, cfg), ConfigError);

    cfg = fast_iris_config();
    cfg.k_folds = 1;
    CHECK_THROWS_AS(run_benchmark(ds, cfg), ConfigError);

    cfg = fast_iris_config();
    cfg.include_baseline_mlp = false;
    cfg.strategies.clear();
    CHECK_THROWS_AS(run_benchmark(ds, cfg), ConfigError);
}

TEST_CASE("errors inside a cell carry seed and fold context") {
    const Dataset ds = load_csv(kIrisPath, "species", ',');
    RunConfig cfg = fast_iris_config();
    cfg.k_folds = 60; // 50 per class cannot fill 60 folds
    try {
        run_benchmark(ds, cfg);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("seed=1") != std::string::npos);
    }
}

TEST_CASE("run_curves emits one row per method, split and epoch") {
    const Dataset ds = load_csv(kIrisPath, "species", ',');
    RunConfig cfg = fast_iris_config();
    cfg.seeds = {3, 4};
    cfg.k_folds = 5;
    cfg.curve_fold = 1;
    cfg.train.epochs = 3;
    cfg.train.early_stop_patience = 50; // never triggers in 3 epochs

    const std::vector<CurveSet> curves = run_curves(ds, cfg);
    REQUIRE(curves.size() == 2);
    const std::vector<std::string> methods = method_order(cfg);

    for (std::size_t si = 0; si < curves.size(); ++si) {
        const CurveSet& cs = curves[si];
        CHECK(cs.seed == cfg.seeds[si]);
        CHECK(cs.fold_id == 1);
        REQUIRE(cs.rows.size() == methods.size() * 2 * 3);

        std::size_t i = 0;
        for (const std::string& method : methods) {
            for (const std::string& split : {std::string("train"), std::string("validation")}) {
                for (std::size_t epoch = 1; epoch <= 3; ++epoch) {
                    const CurveRow& row = cs.rows[i++];
                    CHECK(row.method == method);
                    CHECK(row.split == split);
                    CHECK(row.epoch == epoch);
                    CHECK(row.accuracy >= 0.0);
                    CHECK(row.accuracy <= 1.0);
                }
            }
        }
    }

    TempDir dir("bench-curves");
    write_curves_csv(curves, dir.file("curves.csv"));
    const std::string text = slurp(dir.file("curves.csv"));
    CHECK(text.rfind("epoch,split,method,accuracy\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') ==
          1 + static_cast<long>(curves[0].rows.size() + curves[1].rows.size()));

    RunConfig bad = cfg;
    bad.curve_fold = 5;
    CHECK_THROWS_WITH_AS(run_curves(ds, bad), doctest::Contains("curve-fold"), ConfigError);
}

TEST_CASE("read_feature_matrix aligns columns by name when possible") {
    TempDir dir("bench-features");
    const std::vector<std::string> names = {"a", "b", "c"};

    // Shuffled header plus a label column: values land in model order.
    const std::string shuffled = dir.file("shuffled.csv");
    spit(shuffled, "c,label,a,b\n30,x,10,20\n31,y,11,21\n");
    const Matrix m = read_feature_matrix(shuffled, ',', names, "label");
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    CHECK(m(0, 0) == 10.0);
    CHECK(m(0, 1) == 20.0);
    CHECK(m(0, 2) == 30.0);
    CHECK(m(1, 2) == 31.0);

    // Different names, same count: positional.
    const std::string positional = dir.file("positional.csv");
    spit(positional, "f0,f1,f2\n1,2,3\n");
    const Matrix p = read_feature_matrix(positional, ',', names, "label");
    REQUIRE(p.rows() == 1);
    CHECK(p(0, 0) == 1.0);
    CHECK(p(0, 2) == 3.0);

    // Wrong count: a dimension error naming both sides.
    const std::string narrow = dir.file("narrow.csv");
    spit(narrow, "a,b\n1,2\n");
    CHECK_THROWS_WITH_AS(read_feature_matrix(narrow, ',', names, "label"),
                         doctest::Contains("2 feature columns, model expects 3"),
                         DimensionError);

    // Header-only and zero-byte files: no rows, no error.
    const std::string headed = dir.file("headed.csv");
    spit(headed, "a,b,c\n");
    CHECK(read_feature_matrix(headed, ',', names, "label").rows() == 0);
    const std::string empty = dir.file("empty.csv");
    spit(empty, "");
    const Matrix e = read_feature_matrix(empty, ',', names, "label");
    CHECK(e.rows() == 0);
    CHECK(e.cols() == 3);

    // Unparseable cells are data errors with position info.
    const std::string bad = dir.file("bad.csv");
    spit(bad, "a,b,c\n1,2,oops\n");
    CHECK_THROWS_AS(read_feature_matrix(bad, ',', names, "label"), DataError);
}

TEST_CASE("parallel_for covers every index exactly once and rethrows") {
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h = 0;
    parallel_for(257, 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);

    parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });

    CHECK_THROWS_WITH_AS(
        parallel_for(64, 3,
                     [](std::size_t i) {
                         if (i == 13) throw DataError("boom at 13");
                     }),
        doctest::Contains("boom at 13"), DataError);
}

TEST_CASE("format_double is stable and compact") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(81.0) == "81");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333");
    CHECK(format_double(1e300) == "1e+300");
    CHECK(format_double(0.0) == "0");
}

} // TEST_SUITE
