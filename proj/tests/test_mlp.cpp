#include "mlpforest/mlp.hpp"

#include "mlpforest/errors.hpp"
#include "mlpforest/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

using namespace mlpforest;

namespace {

// Random model/batch pair for gradient checking. Rejects draws that put any
// hidden preactivation within 1e-3 of the ReLU kink, where central
// differences straddle the nondifferentiable point.
struct GradCheckCase {
    MlpModel model;
    Matrix xs;
    std::vector<int> ys;
};

GradCheckCase draw_gradcheck_case(Rng& rng) {
    for (;;) {
        const std::size_t d = 2 + rng.next_index(4);  // 2..5
        const std::size_t h = 2 + rng.next_index(6);  // 2..7
        const std::size_t c = 2 + rng.next_index(3);  // 2..4
        const std::size_t b = 1 + rng.next_index(6);  // 1..6
        MlpModel model = init_mlp(d, h, c, rng.next_u64());
        Matrix xs(b, d);
        for (std::size_t i = 0; i < xs.size(); ++i) xs.data()[i] = rng.next_gaussian();
        std::vector<int> ys(b);
        for (auto& y : ys) y = static_cast<int>(rng.next_index(c));

        bool near_kink = false;
        for (std::size_t r = 0; r < b && !near_kink; ++r) {
            for (std::size_t j = 0; j < h && !near_kink; ++j) {
                double z = model.b1[j];
                for (std::size_t i = 0; i < d; ++i) z += xs(r, i) * model.w1(i, j);
                if (std::abs(z) < 1e-3) near_kink = true;
            }
        }
        if (!near_kink) return {std::move(model), std::move(xs), std::move(ys)};
    }
}

// Max relative error between analytic and central-difference gradients over
// every parameter entry.
double gradcheck_max_rel_err(GradCheckCase& tc) {
    const auto [loss, grads] = loss_and_grads(tc.model, tc.xs, tc.ys);
    (void)loss;
    const double step = 1e-5;
    double worst = 0.0;

    auto check_entry = [&](double* param, double analytic) {
        const double orig = *param;
        *param = orig + step;
        const double lp = loss_only(tc.model, tc.xs, tc.ys);
        *param = orig - step;
        const double lm = loss_only(tc.model, tc.xs, tc.ys);
        *param = orig;
        const double numeric = (lp - lm) / (2.0 * step);
        const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };

    for (std::size_t i = 0; i < tc.model.w1.size(); ++i) {
        check_entry(tc.model.w1.data() + i, grads.w1.data()[i]);
    }
    for (std::size_t i = 0; i < tc.model.b1.size(); ++i) {
        check_entry(tc.model.b1.data() + i, grads.b1[i]);
    }
    for (std::size_t i = 0; i < tc.model.w2.size(); ++i) {
        check_entry(tc.model.w2.data() + i, grads.w2.data()[i]);
    }
    for (std::size_t i = 0; i < tc.model.b2.size(); ++i) {
        check_entry(tc.model.b2.data() + i, grads.b2[i]);
    }
    return worst;
}

bool models_equal(const MlpModel& a, const MlpModel& b) {
    if (!a.w1.same_shape(b.w1) || !a.w2.same_shape(b.w2)) return false;
    for (std::size_t i = 0; i < a.w1.size(); ++i) {
        if (a.w1.data()[i] != b.w1.data()[i]) return false;
    }
    if (a.b1 != b.b1 || a.b2 != b.b2) return false;
    for (std::size_t i = 0; i < a.w2.size(); ++i) {
        if (a.w2.data()[i] != b.w2.data()[i]) return false;
    }
    return true;
}

// Two well-separated gaussian blobs, labels 0/1.
std::pair<Matrix, std::vector<int>> separable_blobs(std::size_t per_class, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(2 * per_class, 2);
    std::vector<int> y(2 * per_class);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const int label = i < per_class ? 0 : 1;
        const double cx = label == 0 ? -3.0 : 3.0;
        x(i, 0) = cx + 0.5 * rng.next_gaussian();
        x(i, 1) = cx + 0.5 * rng.next_gaussian();
        y[i] = label;
    }
    return {std::move(x), std::move(y)};
}

double accuracy_on(const MlpModel& m, const Matrix& x, const std::vector<int>& y) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (predict_label(m, x.row(r)) == y[r]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(x.rows());
}

} // namespace

TEST_SUITE("mlp") {

TEST_CASE("init_mlp is deterministic and zero-biased") {
    const MlpModel a = init_mlp(4, 100, 3, 99);
    const MlpModel b = init_mlp(4, 100, 3, 99);
    const MlpModel c = init_mlp(4, 100, 3, 100);
    CHECK(models_equal(a, b));
    CHECK_FALSE(models_equal(a, c));
    for (double v : a.b1) CHECK(v == 0.0);
    for (double v : a.b2) CHECK(v == 0.0);
    CHECK(a.input_dim() == 4);
    CHECK(a.hidden_size() == 100);
    CHECK(a.class_count() == 3);
    CHECK_THROWS_AS(init_mlp(4, 100, 1, 1), ArgumentError);
}

TEST_CASE("init_mlp weight scale follows the He scheme") {
    // w1 with fan_in=100 gives 100x100 = 1e4 draws at stddev sqrt(2/100).
    const MlpModel m = init_mlp(100, 100, 3, 5);
    double mean = 0.0;
    for (std::size_t i = 0; i < m.w1.size(); ++i) mean += m.w1.data()[i];
    mean /= static_cast<double>(m.w1.size());
    double var = 0.0;
    for (std::size_t i = 0; i < m.w1.size(); ++i) {
        const double d = m.w1.data()[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(m.w1.size());
    const double want = std::sqrt(2.0 / 100.0);
    CHECK(std::abs(std::sqrt(var) - want) < 0.1 * want);
    CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("forward of the all-zero model is uniform") {
    MlpModel m;
    m.w1 = Matrix(4, 10);
    m.b1.assign(10, 0.0);
    m.w2 = Matrix(10, 3);
    m.b2.assign(3, 0.0);
    const std::vector<double> x = {1.0, -2.0, 0.5, 3.0};
    const std::vector<double> p = forward(m, x);
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("forward reproduces forced softmax arithmetic") {
    // Zero hidden path, logits supplied via b2 = (0, 0, ln 2).
    MlpModel m;
    m.w1 = Matrix(2, 3);
    m.b1.assign(3, 0.0);
    m.w2 = Matrix(3, 3);
    m.b2 = {0.0, 0.0, std::log(2.0)};
    const std::vector<double> x = {0.3, -0.7};
    const std::vector<double> p = forward(m, x);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(0.50).epsilon(1e-12));
}

TEST_CASE("forward is stable for huge logits") {
    MlpModel m;
    m.w1 = Matrix(1, 1);
    m.b1.assign(1, 0.0);
    m.w2 = Matrix(1, 2);
    m.b2 = {1000.0, 0.0};
    const std::vector<double> x = {0.0};
    const std::vector<double> p = forward(m, x);
    CHECK(std::isfinite(p[0]));
    CHECK(std::isfinite(p[1]));
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[1] >= 0.0);

    CHECK_THROWS_AS(forward(m, std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST_CASE("forward output sums to one for random extreme inputs") {
    Rng rng(31);
    const MlpModel m = init_mlp(5, 20, 4, 7);
    for (int rep = 0; rep < 10000; ++rep) {
        std::vector<double> x(5);
        const double scale = rep % 3 == 0 ? 1e3 : 1.0;
        for (auto& v : x) v = scale * rng.next_gaussian();
        const std::vector<double> p = forward(m, x);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("predict_label breaks ties toward the lowest class") {
    MlpModel m;
    m.w1 = Matrix(1, 1);
    m.b1.assign(1, 0.0);
    m.w2 = Matrix(1, 3);
    m.b2 = {0.0, 0.0, 0.0}; // uniform output: argmax tie across all classes
    const std::vector<double> x = {1.0};
    CHECK(predict_label(m, x) == 0);
}

TEST_CASE("loss of a uniform model is ln C") {
    MlpModel m;
    m.w1 = Matrix(2, 4);
    m.b1.assign(4, 0.0);
    m.w2 = Matrix(4, 3);
    m.b2.assign(3, 0.0);
    Matrix xs(2, 2);
    xs(0, 0) = 1.0;
    xs(1, 1) = -2.0;
    const std::vector<int> ys = {0, 2};
    CHECK(loss_only(m, xs, ys) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    const auto [loss, grads] = loss_and_grads(m, xs, ys);
    CHECK(loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    (void)grads;
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(32);
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        GradCheckCase tc = draw_gradcheck_case(rng);
        worst = std::max(worst, gradcheck_max_rel_err(tc));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("duplicating batch rows leaves loss and grads unchanged") {
    Rng rng(33);
    GradCheckCase tc = draw_gradcheck_case(rng);
    Matrix doubled(tc.xs.rows() * 2, tc.xs.cols());
    std::vector<int> ys2;
    for (std::size_t r = 0; r < tc.xs.rows() * 2; ++r) {
        const std::size_t src = r % tc.xs.rows();
        for (std::size_t c = 0; c < tc.xs.cols(); ++c) doubled(r, c) = tc.xs(src, c);
    }
    ys2 = tc.ys;
    ys2.insert(ys2.end(), tc.ys.begin(), tc.ys.end());

    const auto [l1, g1] = loss_and_grads(tc.model, tc.xs, tc.ys);
    const auto [l2, g2] = loss_and_grads(tc.model, doubled, ys2);
    CHECK(std::abs(l1 - l2) < 1e-12);
    for (std::size_t i = 0; i < g1.w1.size(); ++i) {
        CHECK(std::abs(g1.w1.data()[i] - g2.w1.data()[i]) < 1e-12);
    }
    for (std::size_t i = 0; i < g1.b2.size(); ++i) {
        CHECK(std::abs(g1.b2[i] - g2.b2[i]) < 1e-12);
    }
}

TEST_CASE("adam first step moves by about lr in the gradient direction") {
    MlpModel m;
    m.w1 = Matrix(1, 1);
    m.b1.assign(1, 0.0);
    m.w2 = Matrix(1, 2);
    m.b2.assign(2, 0.0);
    AdamState state(m);
    GradBuffers g(m);
    g.w1(0, 0) = 0.37;
    const double before = m.w1(0, 0);
    adam_step(state, m, g, 1e-3);
    CHECK(state.t == 1);
    // Bias-corrected first step: lr * g / (|g| + ~eps) ~= lr * sign(g).
    CHECK(m.w1(0, 0) - before == doctest::Approx(-1e-3).epsilon(1e-4));
}

TEST_CASE("adam with zero gradients is a fixed point") {
    MlpModel m = init_mlp(2, 3, 2, 8);
    const MlpModel before = m;
    AdamState state(m);
    const GradBuffers zero(m);
    for (int i = 0; i < 100; ++i) adam_step(state, m, zero, 1e-2);
    CHECK(models_equal(m, before));
    CHECK(state.t == 100);
}

TEST_CASE("adam descends w^2 from w=1") {
    MlpModel m;
    m.w1 = Matrix(1, 1);
    m.w1(0, 0) = 1.0;
    m.b1.assign(1, 0.0);
    m.w2 = Matrix(1, 2);
    m.b2.assign(2, 0.0);
    AdamState state(m);
    GradBuffers g(m);
    for (int i = 0; i < 100; ++i) {
        g.w1(0, 0) = 2.0 * m.w1(0, 0); // d/dw w^2
        adam_step(state, m, g, 0.1);
    }
    CHECK(std::abs(m.w1(0, 0)) < 0.5);
}

TEST_CASE("lr_schedule drops strictly after the drop epoch") {
    TrainConfig cfg;
    CHECK(lr_schedule(cfg, 10) == 1e-3);
    CHECK(lr_schedule(cfg, 50) == 1e-3);
    CHECK(lr_schedule(cfg, 51) == 1e-4);
}

TEST_CASE("training loss decreases over the first full-batch steps") {
    Rng rng(34);
    MlpModel m = init_mlp(3, 10, 3, 11);
    Matrix xs(12, 3);
    for (std::size_t i = 0; i < xs.size(); ++i) xs.data()[i] = rng.next_gaussian();
    std::vector<int> ys(12);
    for (std::size_t i = 0; i < 12; ++i) ys[i] = static_cast<int>(i % 3);
    AdamState state(m);
    double prev = loss_only(m, xs, ys);
    for (int step = 0; step < 10; ++step) {
        const auto [loss, grads] = loss_and_grads(m, xs, ys);
        (void)loss;
        adam_step(state, m, grads, 1e-3);
        const double now = loss_only(m, xs, ys);
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("train_mlp drives a separable blob to perfect train accuracy") {
    const auto [x, y] = separable_blobs(20, 35);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batches_per_epoch = 50;
    cfg.holdout_fraction = 0.0; // run every epoch, return final weights
    cfg.hidden_size = 16;
    const auto [model, hist] = train_mlp(x, y, 2, cfg, 77);
    CHECK_FALSE(hist.early_stopping_enabled);
    CHECK(hist.completed_epochs() == 60);
    CHECK(hist.best_epoch == 60);
    CHECK(accuracy_on(model, x, y) == 1.0);
    CHECK(hist.train_accuracy.back() == 1.0);
    CHECK(hist.holdout_accuracy.empty());
}

TEST_CASE("train_mlp restores the weights of the best holdout epoch") {
    const auto [x, y] = separable_blobs(20, 36);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batches_per_epoch = 30;
    cfg.early_stop_patience = 1;
    cfg.hidden_size = 8;
    const auto [model, hist] = train_mlp(x, y, 2, cfg, 78);
    REQUIRE(hist.early_stopping_enabled);
    REQUIRE(!hist.holdout_accuracy.empty());
    REQUIRE(hist.best_epoch >= 1);
    REQUIRE(hist.best_epoch <= hist.completed_epochs());

    // best_epoch is the first epoch reaching the holdout maximum (later
    // epochs must improve strictly to displace it).
    const double best = hist.holdout_accuracy[hist.best_epoch - 1];
    for (double v : hist.holdout_accuracy) CHECK(v <= best);
    for (std::size_t e = 0; e + 1 < hist.best_epoch; ++e) {
        CHECK(hist.holdout_accuracy[e] < best);
    }

    // Returned weights reproduce the recorded best holdout accuracy.
    Matrix hx(hist.holdout_indices.size(), x.cols());
    std::vector<int> hy;
    for (std::size_t i = 0; i < hist.holdout_indices.size(); ++i) {
        const std::size_t src = hist.holdout_indices[i];
        for (std::size_t c = 0; c < x.cols(); ++c) hx(i, c) = x(src, c);
        hy.push_back(y[src]);
    }
    CHECK(accuracy_on(model, hx, hy) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("train_mlp stops once patience is exhausted") {
    const auto [x, y] = separable_blobs(20, 37);
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.batches_per_epoch = 30;
    cfg.early_stop_patience = 3;
    cfg.hidden_size = 8;
    const auto [model, hist] = train_mlp(x, y, 2, cfg, 79);
    (void)model;
    REQUIRE(hist.early_stopping_enabled);
    // A separable blob saturates early; patience 3 must cut the run short.
    CHECK(hist.completed_epochs() < 100);
    CHECK(hist.completed_epochs() == hist.best_epoch + 3);
}

TEST_CASE("train_mlp history lengths equal completed epochs") {
    const auto [x, y] = separable_blobs(10, 38);
    TrainConfig cfg;
    cfg.epochs = 7;
    cfg.batches_per_epoch = 10;
    cfg.early_stop_patience = 100; // never triggers within 7 epochs
    cfg.hidden_size = 4;
    const auto [model, hist] = train_mlp(x, y, 2, cfg, 80);
    (void)model;
    CHECK(hist.train_accuracy.size() == hist.completed_epochs());
    CHECK(hist.mean_loss.size() == hist.completed_epochs());
    if (hist.early_stopping_enabled) {
        CHECK(hist.holdout_accuracy.size() == hist.completed_epochs());
    }
}

TEST_CASE("train_mlp disables early stopping when a class cannot be split") {
    // One class with a single sample cannot put one sample on each side.
    Matrix x(3, 2);
    x(0, 0) = -1.0;
    x(1, 0) = 1.0;
    x(2, 0) = 1.2;
    std::vector<int> y = {0, 1, 1};
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batches_per_epoch = 5;
    cfg.hidden_size = 4;
    const auto [model, hist] = train_mlp(x, y, 2, cfg, 81);
    (void)model;
    CHECK_FALSE(hist.early_stopping_enabled);
    CHECK(hist.completed_epochs() == 5);
    CHECK(hist.best_epoch == 5);
    CHECK(hist.holdout_indices.empty());
}

TEST_CASE("train_mlp is deterministic per seed") {
    const auto [x, y] = separable_blobs(15, 39);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batches_per_epoch = 15;
    cfg.hidden_size = 6;
    const auto [m1, h1] = train_mlp(x, y, 2, cfg, 4242);
    const auto [m2, h2] = train_mlp(x, y, 2, cfg, 4242);
    const auto [m3, h3] = train_mlp(x, y, 2, cfg, 4243);
    CHECK(models_equal(m1, m2));
    CHECK(h1.train_accuracy == h2.train_accuracy);
    CHECK(h1.holdout_accuracy == h2.holdout_accuracy);
    CHECK(h1.mean_loss == h2.mean_loss);
    CHECK(h1.best_epoch == h2.best_epoch);
    CHECK(h1.holdout_indices == h2.holdout_indices);
    CHECK_FALSE(h1.mean_loss == h3.mean_loss);
}

TEST_CASE("train_mlp rejects an empty training set") {
    Matrix x(0, 3);
    std::vector<int> y;
    TrainConfig cfg;
    CHECK_THROWS_AS(train_mlp(x, y, 2, cfg, 1), ArgumentError);
}

TEST_CASE("train_mlp calls the observer once per completed epoch") {
    const auto [x, y] = separable_blobs(10, 40);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batches_per_epoch = 5;
    cfg.holdout_fraction = 0.0;
    cfg.hidden_size = 4;
    std::vector<std::size_t> seen;
    const auto [model, hist] = train_mlp(x, y, 2, cfg, 82,
                                         [&seen](std::size_t epoch, const MlpModel& m) {
                                             (void)m;
                                             seen.push_back(epoch);
                                         });
    (void)model;
    REQUIRE(seen.size() == hist.completed_epochs());
    for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == i + 1);
}

} // TEST_SUITE
