#pragma once

// Single-hidden-layer softmax classifier trained with Adam. Hidden activation
// is ReLU, loss is mean categorical cross-entropy; the learning rate starts at
// lr_initial and drops to lr_after_drop strictly after lr_drop_epoch (epochs
// are 1-indexed). Each epoch draws batches_per_epoch mini-batches with
// replacement, so tiny training folds can still fill an epoch.

#include "mlpforest/linalg.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mlpforest {

struct MlpModel {
    Matrix w1;               // input_dim x hidden
    std::vector<double> b1;  // hidden
    Matrix w2;               // hidden x classes
    std::vector<double> b2;  // classes

    std::size_t input_dim() const { return w1.rows(); }
    std::size_t hidden_size() const { return w1.cols(); }
    std::size_t class_count() const { return w2.cols(); }
};

// Parameter-shaped buffers; used for gradients and Adam moments.
struct GradBuffers {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;

    GradBuffers() = default;
    explicit GradBuffers(const MlpModel& shape)
        : w1(shape.w1.rows(), shape.w1.cols()),
          b1(shape.b1.size(), 0.0),
          w2(shape.w2.rows(), shape.w2.cols()),
          b2(shape.b2.size(), 0.0) {}
};

struct AdamState {
    GradBuffers m;
    GradBuffers v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(const MlpModel& shape) : m(shape), v(shape) {}
};

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batches_per_epoch = 200;
    std::size_t batch_size = 0; // 0 -> min(32, size of the batch-sampled set)
    double lr_initial = 1e-3;
    double lr_after_drop = 1e-4;
    std::size_t lr_drop_epoch = 50;
    std::size_t early_stop_patience = 10;
    double holdout_fraction = 0.2; // 0 disables early stopping
    std::size_t hidden_size = 100;
};

struct TrainHistory {
    std::vector<double> train_accuracy;   // per completed epoch, on all given rows
    std::vector<double> holdout_accuracy; // per completed epoch; empty when disabled
    std::vector<double> mean_loss;        // per completed epoch, mean over batches
    std::size_t best_epoch = 0;           // 1-indexed epoch whose weights were kept
    bool early_stopping_enabled = false;
    std::vector<std::size_t> holdout_indices; // rows held out of batching; empty when disabled

    std::size_t completed_epochs() const { return train_accuracy.size(); }
};

// Called after every finished epoch with the current (pre-restore) weights.
using EpochObserver = std::function<void(std::size_t epoch, const MlpModel&)>;

// He-scheme init: weights ~ N(0, 2/fan_in), biases exactly zero.
MlpModel init_mlp(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                  std::uint64_t seed);

// Softmax probabilities for one sample; max-subtracted for stability.
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

int predict_label(const MlpModel& model, std::span<const double> x);

double loss_only(const MlpModel& model, const Matrix& xs, std::span<const int> ys);

// Mean cross-entropy over the batch plus its exact analytic gradients.
std::pair<double, GradBuffers> loss_and_grads(const MlpModel& model, const Matrix& xs,
                                              std::span<const int> ys);

// Standard bias-corrected Adam update; increments state.t.
void adam_step(AdamState& state, MlpModel& params, const GradBuffers& grads, double lr);

double lr_schedule(const TrainConfig& cfg, std::size_t epoch);

// Trains on (x, y). A stratified holdout of holdout_fraction rows monitors
// early stopping; when any class cannot place one sample on both sides of the
// split, early stopping is disabled and all epochs run. Returns the weights
// of the best holdout epoch (or the final weights when disabled).
std::pair<MlpModel, TrainHistory> train_mlp(const Matrix& x, std::span<const int> y,
                                            std::size_t class_count, const TrainConfig& cfg,
                                            std::uint64_t seed,
                                            const EpochObserver& observer = {});

} // namespace mlpforest
