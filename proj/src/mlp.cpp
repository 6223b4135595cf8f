#include "mlpforest/mlp.hpp"

#include "mlpforest/errors.hpp"
#include "mlpforest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mlpforest {

namespace {

// hidden_pre = x * w1 + b1 (row-vector convention)
void hidden_preactivation(const MlpModel& m, std::span<const double> x, std::vector<double>& pre) {
    const std::size_t h = m.hidden_size();
    pre.assign(m.b1.begin(), m.b1.end());
    for (std::size_t i = 0; i < m.input_dim(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* w_row = m.w1.data() + i * h;
        for (std::size_t j = 0; j < h; ++j) pre[j] += xi * w_row[j];
    }
}

void logits_from_hidden(const MlpModel& m, std::span<const double> hidden,
                        std::vector<double>& logits) {
    const std::size_t c = m.class_count();
    logits.assign(m.b2.begin(), m.b2.end());
    for (std::size_t j = 0; j < m.hidden_size(); ++j) {
        const double hj = hidden[j];
        if (hj == 0.0) continue;
        const double* w_row = m.w2.data() + j * c;
        for (std::size_t k = 0; k < c; ++k) logits[k] += hj * w_row[k];
    }
}

// In-place softmax with max subtraction; returns log-sum-exp of the original
// logits so the caller can form the cross-entropy without a second pass.
double softmax_inplace(std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : logits) v /= sum;
    return mx + std::log(sum);
}

int argmax(std::span<const double> v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

void check_batch(const MlpModel& m, const Matrix& xs, std::span<const int> ys) {
    if (xs.rows() == 0) throw ArgumentError("loss_and_grads: empty batch");
    if (xs.cols() != m.input_dim()) {
        throw DimensionError("loss_and_grads: batch has " + std::to_string(xs.cols()) +
                             " features, model expects " + std::to_string(m.input_dim()));
    }
    if (ys.size() != xs.rows()) {
        throw DimensionError("loss_and_grads: " + std::to_string(xs.rows()) + " rows vs " +
                             std::to_string(ys.size()) + " labels");
    }
    for (int y : ys) {
        if (y < 0 || static_cast<std::size_t>(y) >= m.class_count()) {
            throw ArgumentError("loss_and_grads: label " + std::to_string(y) +
                                " out of range [0, " + std::to_string(m.class_count()) + ")");
        }
    }
}

void adam_update_array(double* p, const double* g, double* m, double* v, std::size_t n,
                       double lr, double b1, double b2, double eps,
                       double bias1, double bias2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

double accuracy_on(const MlpModel& m, const Matrix& x, std::span<const int> y,
                   std::span<const std::size_t> rows) {
    if (rows.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t r : rows)
        if (predict_label(m, x.row(r)) == y[r]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

} // namespace

MlpModel init_mlp(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                  std::uint64_t seed) {
    if (input_dim < 1 || hidden < 1) {
        throw ArgumentError("init_mlp: input_dim and hidden must be >= 1");
    }
    if (classes < 2) throw ArgumentError("init_mlp: need at least 2 classes");
    MlpModel m;
    m.w1 = Matrix(input_dim, hidden);
    m.b1.assign(hidden, 0.0);
    m.w2 = Matrix(hidden, classes);
    m.b2.assign(classes, 0.0);
    Rng rng(seed);
    const double scale1 = std::sqrt(2.0 / static_cast<double>(input_dim));
    for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = scale1 * rng.next_gaussian();
    const double scale2 = std::sqrt(2.0 / static_cast<double>(hidden));
    for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = scale2 * rng.next_gaussian();
    return m;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim()) {
        throw DimensionError("forward: input has " + std::to_string(x.size()) +
                             " features, model expects " + std::to_string(model.input_dim()));
    }
    std::vector<double> hidden;
    hidden_preactivation(model, x, hidden);
    for (double& v : hidden) v = std::max(0.0, v);
    std::vector<double> probs;
    logits_from_hidden(model, hidden, probs);
    softmax_inplace(probs);
    return probs;
}

int predict_label(const MlpModel& model, std::span<const double> x) {
    const std::vector<double> probs = forward(model, x);
    return argmax(probs);
}

double loss_only(const MlpModel& model, const Matrix& xs, std::span<const int> ys) {
    check_batch(model, xs, ys);
    std::vector<double> hidden, logits;
    double loss = 0.0;
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        hidden_preactivation(model, xs.row(r), hidden);
        for (double& v : hidden) v = std::max(0.0, v);
        logits_from_hidden(model, hidden, logits);
        const double target_logit = logits[ys[r]];
        const double lse = softmax_inplace(logits);
        loss += lse - target_logit;
    }
    return loss / static_cast<double>(xs.rows());
}

std::pair<double, GradBuffers> loss_and_grads(const MlpModel& model, const Matrix& xs,
                                              std::span<const int> ys) {
    check_batch(model, xs, ys);
    const std::size_t h = model.hidden_size();
    const std::size_t c = model.class_count();
    GradBuffers grads(model);
    std::vector<double> pre, hidden(h), probs, dlogits(c), dhidden(h);
    double loss = 0.0;

    for (std::size_t r = 0; r < xs.rows(); ++r) {
        const auto x = xs.row(r);
        hidden_preactivation(model, x, pre);
        for (std::size_t j = 0; j < h; ++j) hidden[j] = std::max(0.0, pre[j]);
        logits_from_hidden(model, hidden, probs);
        const double target_logit = probs[ys[r]];
        const double lse = softmax_inplace(probs);
        loss += lse - target_logit;

        // d(cross-entropy)/d(logit_k) = p_k - 1[k == y]
        for (std::size_t k = 0; k < c; ++k) dlogits[k] = probs[k];
        dlogits[ys[r]] -= 1.0;

        for (std::size_t k = 0; k < c; ++k) grads.b2[k] += dlogits[k];
        for (std::size_t j = 0; j < h; ++j) {
            const double hj = hidden[j];
            double acc = 0.0;
            const double* w_row = model.w2.data() + j * c;
            double* g_row = grads.w2.data() + j * c;
            for (std::size_t k = 0; k < c; ++k) {
                g_row[k] += hj * dlogits[k];
                acc += w_row[k] * dlogits[k];
            }
            dhidden[j] = (pre[j] > 0.0) ? acc : 0.0;
        }
        for (std::size_t j = 0; j < h; ++j) grads.b1[j] += dhidden[j];
        for (std::size_t i = 0; i < model.input_dim(); ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            double* g_row = grads.w1.data() + i * h;
            for (std::size_t j = 0; j < h; ++j) g_row[j] += xi * dhidden[j];
        }
    }

    const double inv = 1.0 / static_cast<double>(xs.rows());
    loss *= inv;
    for (std::size_t i = 0; i < grads.w1.size(); ++i) grads.w1.data()[i] *= inv;
    for (double& g : grads.b1) g *= inv;
    for (std::size_t i = 0; i < grads.w2.size(); ++i) grads.w2.data()[i] *= inv;
    for (double& g : grads.b2) g *= inv;
    return {loss, std::move(grads)};
}

void adam_step(AdamState& state, MlpModel& params, const GradBuffers& grads, double lr) {
    if (!params.w1.same_shape(grads.w1) || !params.w2.same_shape(grads.w2) ||
        params.b1.size() != grads.b1.size() || params.b2.size() != grads.b2.size()) {
        throw DimensionError("adam_step: gradient shapes do not match parameters");
    }
    state.t += 1;
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    adam_update_array(params.w1.data(), grads.w1.data(), state.m.w1.data(), state.v.w1.data(),
                      params.w1.size(), lr, state.beta1, state.beta2, state.eps, bias1, bias2);
    adam_update_array(params.b1.data(), grads.b1.data(), state.m.b1.data(), state.v.b1.data(),
                      params.b1.size(), lr, state.beta1, state.beta2, state.eps, bias1, bias2);
    adam_update_array(params.w2.data(), grads.w2.data(), state.m.w2.data(), state.v.w2.data(),
                      params.w2.size(), lr, state.beta1, state.beta2, state.eps, bias1, bias2);
    adam_update_array(params.b2.data(), grads.b2.data(), state.m.b2.data(), state.v.b2.data(),
                      params.b2.size(), lr, state.beta1, state.beta2, state.eps, bias1, bias2);
}

double lr_schedule(const TrainConfig& cfg, std::size_t epoch) {
    return (epoch <= cfg.lr_drop_epoch) ? cfg.lr_initial : cfg.lr_after_drop;
}

std::pair<MlpModel, TrainHistory> train_mlp(const Matrix& x, std::span<const int> y,
                                            std::size_t class_count, const TrainConfig& cfg,
                                            std::uint64_t seed,
                                            const EpochObserver& observer) {
    const std::size_t n = x.rows();
    if (n == 0) throw ArgumentError("train_mlp: empty training set");
    if (y.size() != n) throw DimensionError("train_mlp: feature/label row counts differ");
    if (cfg.holdout_fraction < 0.0 || cfg.holdout_fraction >= 1.0) {
        throw ArgumentError("train_mlp: holdout_fraction must be in [0, 1)");
    }

    std::vector<std::vector<std::size_t>> by_class(class_count);
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= class_count) {
            throw ArgumentError("train_mlp: label out of range at row " + std::to_string(i));
        }
        by_class[y[i]].push_back(i);
    }

    // Stratified holdout for the early-stopping monitor. Disabled when any
    // class cannot put one sample on each side of the split.
    bool early_stop = cfg.holdout_fraction > 0.0;
    if (early_stop) {
        for (const auto& cls : by_class) {
            if (cls.size() < 2) {
                early_stop = false;
                break;
            }
        }
    }
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> holdout_rows;
    if (early_stop) {
        Rng split_rng(derive_seed(seed, 0xA001));
        for (auto cls : by_class) {
            split_rng.shuffle(cls);
            std::size_t take = static_cast<std::size_t>(
                std::floor(static_cast<double>(cls.size()) * cfg.holdout_fraction));
            take = std::clamp<std::size_t>(take, 1, cls.size() - 1);
            holdout_rows.insert(holdout_rows.end(), cls.begin(), cls.begin() + take);
            train_rows.insert(train_rows.end(), cls.begin() + take, cls.end());
        }
        std::sort(train_rows.begin(), train_rows.end());
        std::sort(holdout_rows.begin(), holdout_rows.end());
    } else {
        train_rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) train_rows[i] = i;
    }

    const std::size_t batch_size =
        cfg.batch_size > 0 ? cfg.batch_size : std::min<std::size_t>(32, train_rows.size());

    MlpModel model = init_mlp(x.cols(), cfg.hidden_size, class_count, seed);
    AdamState adam(model);
    Rng batch_rng(derive_seed(seed, 0xB002));

    TrainHistory history;
    history.early_stopping_enabled = early_stop;
    history.holdout_indices = holdout_rows;

    std::vector<std::size_t> all_rows(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;

    MlpModel best = model;
    double best_holdout = -1.0;
    std::size_t epochs_since_improvement = 0;
    Matrix batch(batch_size, x.cols());
    std::vector<int> batch_labels(batch_size);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = lr_schedule(cfg, epoch);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < cfg.batches_per_epoch; ++b) {
            for (std::size_t s = 0; s < batch_size; ++s) {
                const std::size_t r =
                    train_rows[batch_rng.next_index(train_rows.size())];
                std::copy_n(x.data() + r * x.cols(), x.cols(),
                            batch.data() + s * x.cols());
                batch_labels[s] = y[r];
            }
            auto [loss, grads] = loss_and_grads(model, batch, batch_labels);
            adam_step(adam, model, grads, lr);
            loss_sum += loss;
        }
        history.mean_loss.push_back(loss_sum / static_cast<double>(cfg.batches_per_epoch));
        history.train_accuracy.push_back(accuracy_on(model, x, y, all_rows));

        if (early_stop) {
            const double h_acc = accuracy_on(model, x, y, holdout_rows);
            history.holdout_accuracy.push_back(h_acc);
            if (h_acc > best_holdout) {
                best_holdout = h_acc;
                best = model;
                history.best_epoch = epoch;
                epochs_since_improvement = 0;
            } else {
                ++epochs_since_improvement;
            }
            if (observer) observer(epoch, model);
            if (epochs_since_improvement >= cfg.early_stop_patience) break;
        } else {
            if (observer) observer(epoch, model);
        }
    }

    if (early_stop) {
        model = std::move(best);
    } else {
        history.best_epoch = history.completed_epochs();
    }
    return {std::move(model), std::move(history)};
}

} // namespace mlpforest
