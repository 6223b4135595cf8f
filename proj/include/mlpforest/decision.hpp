#pragma once

// Fusion of the N member probability rows into one label.
//
//   MajorityVote       member j votes for its argmax class only when that
//                      class's probability strictly exceeds the threshold;
//                      low-confidence members abstain. Plurality wins.
//   Equiprobable       posterior_i = mean_j probs[j][i]
//   WeightedProbability posterior_i = sum_j probs[j][i] * prior_j with the
//                      inverse-eigenvalue priors; needs a whitened forest.
//
// When every vote is rejected, or the top vote count is tied, the vote
// strategy falls back to equiprobable averaging over ALL members (flagged via
// fallback_used) so the benchmark never abstains. Ties in a posterior argmax
// break toward the lowest class index.

#include "mlpforest/forest.hpp"
#include "mlpforest/linalg.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mlpforest {

enum class StrategyKind { MajorityVote, Equiprobable, WeightedProbability };

struct DecisionStrategy {
    StrategyKind kind = StrategyKind::Equiprobable;
    double vote_threshold = 0.5; // must be in (0, 1); used by MajorityVote only
};

struct MemberVote {
    bool accepted = false;
    int label = -1; // valid only when accepted
};

struct Decision {
    int label = -1;
    std::optional<std::vector<double>> posterior; // sums to 1 when present
    std::optional<std::vector<MemberVote>> votes; // present for vote strategy
    bool fallback_used = false;
};

Decision vote_decide(const Matrix& probs, double threshold = 0.5);

Decision prob_decide(const Matrix& probs, std::span<const double> priors);

Decision predict(const ForestModel& f, std::span<const double> x, const DecisionStrategy& s);

std::string strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(const std::string& name);

} // namespace mlpforest
