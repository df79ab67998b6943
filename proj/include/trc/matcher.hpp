#pragma once

#include <vector>

#include "trc/interval.hpp"
#include "trc/prediction.hpp"

namespace trc {

/// Ground truth padded to the query count: the first true_count entries are
/// repetitive cycles, the rest carry the "others" class whose location is
/// meaningless.
struct TargetSet {
    std::vector<int> classes;         // 1 = repetitive, 0 = others
    std::vector<Interval> locations;  // meaningful only where classes[i] == 1
    int true_count = 0;

    int size() const { return static_cast<int>(classes.size()); }
};

struct Assignment {
    std::vector<int> gt_to_pred;  // bijection over {0..Q-1}
    double total_cost = 0.0;
};

void check_targets(const TargetSet& targets);

// Pads N ground-truth cycles with the "others" class up to q slots.
TargetSet pad_targets(const std::vector<Interval>& cycles, int q);

// Pairwise cost: -prob + position_loss for a repetitive target, exactly 0
// for an "others" target (constant, so it cannot influence the assignment).
double matching_cost(int gt_class, const Interval& gt_loc, double pred_prob,
                     const Interval& pred_loc, const PositionLossWeights& w);

// Row i = target i, column j = prediction j.
std::vector<double> build_cost_matrix(const TargetSet& targets, const PredictionSet& preds,
                                      const PositionLossWeights& w);

// Exact minimum-cost assignment over all permutations, O(n^3) augmenting
// paths. Cost ties resolve toward the lowest prediction index; the result is
// deterministic for any input.
Assignment hungarian(const std::vector<double>& cost, int n);

// build_cost_matrix + hungarian. Runs on plain values, outside any tape;
// gradients never flow through the discrete assignment.
Assignment match(const TargetSet& targets, const PredictionSet& preds,
                 const PositionLossWeights& w);

}  // namespace trc
