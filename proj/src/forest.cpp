#include "mlpforest/forest.hpp"

#include "mlpforest/errors.hpp"
#include "mlpforest/rng.hpp"

#include <cmath>
#include <string>

namespace mlpforest {

std::vector<FeatureSubset> generate_subsets(std::size_t n_features) {
    if (n_features < 2) {
        throw ArgumentError("generate_subsets: need at least 2 features, got " +
                            std::to_string(n_features));
    }
    std::vector<FeatureSubset> subsets(n_features);
    for (std::size_t j = 0; j < n_features; ++j) {
        subsets[j].excluded_index = j;
        subsets[j].retained_indices.reserve(n_features - 1);
        for (std::size_t i = 0; i < n_features; ++i)
            if (i != j) subsets[j].retained_indices.push_back(i);
    }
    return subsets;
}

WhiteningTransform fit_whitening(const Matrix& x_train, double floor) {
    const std::size_t m = x_train.rows();
    const std::size_t n = x_train.cols();
    if (m < 2) throw ArgumentError("fit_whitening: need at least 2 rows");

    WhiteningTransform t;
    t.eigenvalue_floor = floor;
    t.means.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) t.means[c] += x_train(r, c);
    for (double& v : t.means) v /= static_cast<double>(m);

    Matrix centered(m, n);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) centered(r, c) = x_train(r, c) - t.means[c];

    Matrix cov = matmul(transpose(centered), centered);
    const double inv = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < cov.size(); ++i) cov.data()[i] *= inv;

    EigenDecomposition eig = jacobi_eigh(cov);
    t.eigenvectors = std::move(eig.eigenvectors);
    t.eigenvalues = std::move(eig.eigenvalues);
    for (double& ev : t.eigenvalues)
        if (ev < floor) ev = floor;
    return t;
}

std::vector<double> apply_whitening_row(const WhiteningTransform& t, std::span<const double> x) {
    const std::size_t n = t.means.size();
    if (x.size() != n) {
        throw DimensionError("apply_whitening: row has " + std::to_string(x.size()) +
                             " features, transform expects " + std::to_string(n));
    }
    std::vector<double> out(n, 0.0);
    // (x - mean) * P, then scale each coordinate by lambda^{-1/2}.
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i] - t.means[i];
        if (xi == 0.0) continue;
        const double* p_row = t.eigenvectors.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) out[j] += xi * p_row[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= std::sqrt(t.eigenvalues[j]);
    return out;
}

Matrix apply_whitening(const WhiteningTransform& t, const Matrix& x) {
    if (x.cols() != t.means.size()) {
        throw DimensionError("apply_whitening: " + std::to_string(x.cols()) +
                             " columns vs " + std::to_string(t.means.size()) + " fitted");
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const std::vector<double> w = apply_whitening_row(t, x.row(r));
        std::copy(w.begin(), w.end(), out.data() + r * out.cols());
    }
    return out;
}

std::vector<double> compute_priors(std::span<const double> eigenvalues, PriorMode mode) {
    const std::size_t n = eigenvalues.size();
    if (n == 0) throw ArgumentError("compute_priors: empty eigenvalue vector");
    for (double ev : eigenvalues) {
        if (!(ev > 0.0)) {
            throw ArgumentError("compute_priors: nonpositive eigenvalue " + std::to_string(ev));
        }
    }
    std::vector<double> priors(n);
    if (mode == PriorMode::Equiprobable) {
        const double u = 1.0 / static_cast<double>(n);
        for (double& p : priors) p = u;
        return priors;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        priors[j] = 1.0 / eigenvalues[j];
        sum += priors[j];
    }
    for (double& p : priors) p /= sum;
    return priors;
}

std::vector<double> project_to_subset(const FeatureSubset& subset, std::span<const double> x) {
    std::vector<double> out;
    out.reserve(subset.retained_indices.size());
    for (std::size_t i : subset.retained_indices) out.push_back(x[i]);
    return out;
}

namespace {

Matrix drop_column(const Matrix& x, std::size_t column) {
    Matrix out(x.rows(), x.cols() - 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::size_t w = 0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            if (c == column) continue;
            out(r, w++) = x(r, c);
        }
    }
    return out;
}

} // namespace

ForestModel train_forest(const Matrix& x, std::span<const int> y, std::size_t class_count,
                         const TrainConfig& cfg, bool whiten, std::uint64_t base_seed,
                         double eigenvalue_floor, const MemberObserver& observer) {
    const std::size_t n = x.cols();
    if (n < 2) throw ArgumentError("train_forest: need at least 2 features");
    if (x.rows() == 0) throw ArgumentError("train_forest: empty training set");

    ForestModel forest;
    forest.class_count = class_count;
    forest.subsets = generate_subsets(n);
    forest.priors_equiprobable.assign(n, 1.0 / static_cast<double>(n));

    Matrix training_space = x;
    if (whiten) {
        forest.whitening = fit_whitening(x, eigenvalue_floor);
        training_space = apply_whitening(*forest.whitening, x);
        forest.priors_weighted =
            compute_priors(forest.whitening->eigenvalues, PriorMode::Weighted);
    }

    forest.members.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Matrix member_x = drop_column(training_space, j);
        const std::uint64_t member_seed = derive_seed(base_seed, j);
        EpochObserver epoch_obs;
        if (observer) {
            epoch_obs = [&observer, j](std::size_t epoch, const MlpModel& m) {
                observer(j, epoch, m);
            };
        }
        auto [model, history] = train_mlp(member_x, y, class_count, cfg, member_seed, epoch_obs);
        forest.members.push_back(std::move(model));
    }
    return forest;
}

Matrix member_probabilities(const ForestModel& f, std::span<const double> x) {
    const std::size_t n = f.feature_count();
    if (x.size() != n) {
        throw DimensionError("member_probabilities: input has " + std::to_string(x.size()) +
                             " features, forest expects " + std::to_string(n));
    }
    std::vector<double> space(x.begin(), x.end());
    if (f.whitening) space = apply_whitening_row(*f.whitening, x);

    Matrix probs(f.member_count(), f.class_count);
    for (std::size_t j = 0; j < f.member_count(); ++j) {
        const std::vector<double> input = project_to_subset(f.subsets[j], space);
        const std::vector<double> p = forward(f.members[j], input);
        std::copy(p.begin(), p.end(), probs.data() + j * probs.cols());
    }
    return probs;
}

} // namespace mlpforest
