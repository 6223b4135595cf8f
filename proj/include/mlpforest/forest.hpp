#pragma once

// The MLP forest: one member network per left-out feature. With N input
// features there are exactly N members -- member j is trained on the N-1
// features that remain after dropping feature j. Only these top-dimensional
// subsets are kept; smaller subsets would explode combinatorially and shed
// too much information.
//
// Whitening convention: samples are rows, so data is mapped by
// (x - mean) * P * Lambda^{-1/2}, with P and Lambda from the
// eigendecomposition of the training covariance (X_c^T X_c)/(M-1).
// Eigenvalues are floored to keep Lambda^{-1/2} and the 1/lambda priors
// finite on rank-deficient data.
//
// For a whitened forest, subsets index TRANSFORMED features, which is what
// pairs member j with eigenvalue lambda_j and makes the inverse-eigenvalue
// prior meaningful: members that drop a high-variance direction get a small
// prior. For a raw forest, subsets index the original features and the
// weighted prior is unavailable.

#include "mlpforest/linalg.hpp"
#include "mlpforest/mlp.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mlpforest {

struct FeatureSubset {
    std::size_t excluded_index = 0;
    std::vector<std::size_t> retained_indices; // sorted, length N-1
};

struct WhiteningTransform {
    std::vector<double> means;       // N
    Matrix eigenvectors;             // N x N, column j pairs with eigenvalues[j]
    std::vector<double> eigenvalues; // N, descending, floored
    double eigenvalue_floor = 1e-8;
};

enum class PriorMode { Equiprobable, Weighted };

struct ForestModel {
    std::vector<MlpModel> members;     // N, member j excludes feature j
    std::vector<FeatureSubset> subsets;
    std::optional<WhiteningTransform> whitening;
    std::vector<double> priors_equiprobable; // N, uniform
    std::vector<double> priors_weighted;     // N when whitened, empty otherwise
    std::size_t class_count = 0;

    std::size_t member_count() const { return members.size(); }
    std::size_t feature_count() const { return subsets.size(); }
};

// n_features subsets, subset j excluding feature j, ordered by excluded index.
std::vector<FeatureSubset> generate_subsets(std::size_t n_features);

WhiteningTransform fit_whitening(const Matrix& x_train, double floor = 1e-8);

Matrix apply_whitening(const WhiteningTransform& t, const Matrix& x);
std::vector<double> apply_whitening_row(const WhiteningTransform& t, std::span<const double> x);

// Equiprobable: uniform 1/N. Weighted: prior_j = (1/lambda_j) / sum_k(1/lambda_k),
// so the member blind to direction j is discounted in proportion to that
// direction's variance. Eigenvalues must be positive (post-flooring).
std::vector<double> compute_priors(std::span<const double> eigenvalues, PriorMode mode);

// Called like EpochObserver but per member.
using MemberObserver = std::function<void(std::size_t member, std::size_t epoch, const MlpModel&)>;

// Trains the N members sequentially with per-member seeds derived from
// base_seed, optionally in a whitened feature space fitted on these rows.
// Callers standardize the features beforehand.
ForestModel train_forest(const Matrix& x, std::span<const int> y, std::size_t class_count,
                         const TrainConfig& cfg, bool whiten, std::uint64_t base_seed,
                         double eigenvalue_floor = 1e-8,
                         const MemberObserver& observer = {});

// N x C matrix of per-member class probabilities for one sample in the raw
// (pre-whitening) feature space of the forest's training data.
Matrix member_probabilities(const ForestModel& f, std::span<const double> x);

// Member j's view of an already-transformed sample: all coordinates but j.
std::vector<double> project_to_subset(const FeatureSubset& subset, std::span<const double> x);

} // namespace mlpforest
