#include "mlpforest/decision.hpp"

#include "mlpforest/errors.hpp"

#include <cmath>
#include <string>

namespace mlpforest {

namespace {

void check_rows_normalized(const Matrix& probs) {
    if (probs.rows() == 0 || probs.cols() == 0) {
        throw ArgumentError("decision: empty probability matrix");
    }
    for (std::size_t j = 0; j < probs.rows(); ++j) {
        double sum = 0.0;
        for (std::size_t c = 0; c < probs.cols(); ++c) sum += probs(j, c);
        if (std::abs(sum - 1.0) > 1e-6) {
            throw ArgumentError("decision: member row " + std::to_string(j) +
                                " sums to " + std::to_string(sum) + ", not 1");
        }
    }
}

int argmax_lowest(std::span<const double> v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

std::vector<double> mean_row(const Matrix& probs) {
    std::vector<double> mean(probs.cols(), 0.0);
    for (std::size_t j = 0; j < probs.rows(); ++j)
        for (std::size_t c = 0; c < probs.cols(); ++c) mean[c] += probs(j, c);
    for (double& v : mean) v /= static_cast<double>(probs.rows());
    return mean;
}

} // namespace

Decision vote_decide(const Matrix& probs, double threshold) {
    check_rows_normalized(probs);
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ArgumentError("vote_decide: threshold must be in (0, 1)");
    }
    const std::size_t classes = probs.cols();

    Decision d;
    d.votes.emplace(probs.rows());
    std::vector<std::size_t> counts(classes, 0);
    std::size_t total_votes = 0;
    for (std::size_t j = 0; j < probs.rows(); ++j) {
        const auto row = probs.row(j);
        const int top = argmax_lowest(row);
        if (row[top] > threshold) {
            (*d.votes)[j] = {true, top};
            ++counts[top];
            ++total_votes;
        }
    }

    if (total_votes > 0) {
        std::size_t best = 0;
        bool tie = false;
        for (std::size_t c = 1; c < classes; ++c) {
            if (counts[c] > counts[best]) {
                best = c;
                tie = false;
            } else if (counts[c] == counts[best] && counts[c] > 0) {
                tie = true;
            }
        }
        if (!tie) {
            d.label = static_cast<int>(best);
            return d;
        }
    }

    // All rejected or tied: average every member instead of abstaining.
    d.fallback_used = true;
    d.posterior = mean_row(probs);
    d.label = argmax_lowest(*d.posterior);
    return d;
}

Decision prob_decide(const Matrix& probs, std::span<const double> priors) {
    check_rows_normalized(probs);
    if (priors.size() != probs.rows()) {
        throw DimensionError("prob_decide: " + std::to_string(priors.size()) +
                             " priors for " + std::to_string(probs.rows()) + " members");
    }
    double prior_sum = 0.0;
    for (double p : priors) prior_sum += p;
    if (std::abs(prior_sum - 1.0) > 1e-9) {
        throw ArgumentError("prob_decide: priors sum to " + std::to_string(prior_sum) +
                            ", not 1");
    }

    Decision d;
    d.posterior.emplace(probs.cols(), 0.0);
    for (std::size_t j = 0; j < probs.rows(); ++j) {
        const double w = priors[j];
        for (std::size_t c = 0; c < probs.cols(); ++c)
            (*d.posterior)[c] += probs(j, c) * w;
    }
    d.label = argmax_lowest(*d.posterior);
    return d;
}

Decision predict(const ForestModel& f, std::span<const double> x, const DecisionStrategy& s) {
    const Matrix probs = member_probabilities(f, x);
    switch (s.kind) {
        case StrategyKind::MajorityVote:
            return vote_decide(probs, s.vote_threshold);
        case StrategyKind::Equiprobable:
            return prob_decide(probs, f.priors_equiprobable);
        case StrategyKind::WeightedProbability:
            if (!f.whitening || f.priors_weighted.empty()) {
                throw ConfigError(
                    "predict: weighted_probability requires a whitened forest; "
                    "this forest was trained on raw features");
            }
            return prob_decide(probs, f.priors_weighted);
    }
    throw ArgumentError("predict: unknown strategy");
}

std::string strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::MajorityVote: return "majority_vote";
        case StrategyKind::Equiprobable: return "equiprobable";
        case StrategyKind::WeightedProbability: return "weighted_probability";
    }
    return "unknown";
}

StrategyKind strategy_from_name(const std::string& name) {
    if (name == "majority_vote" || name == "vote") return StrategyKind::MajorityVote;
    if (name == "equiprobable") return StrategyKind::Equiprobable;
    if (name == "weighted_probability" || name == "weighted") {
        return StrategyKind::WeightedProbability;
    }
    throw ConfigError("unknown strategy '" + name +
                      "' (expected vote, equiprobable, or weighted)");
}

} // namespace mlpforest
