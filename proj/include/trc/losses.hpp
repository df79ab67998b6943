#pragma once

#include <utility>
#include <vector>

#include "trc/interval.hpp"
#include "trc/matcher.hpp"
#include "trc/prediction.hpp"
#include "trc/tensor.hpp"

namespace trc {

struct LossWeights {
    double lambda_hungarian = 1.0;
    double lambda_ctrs = 1.0;
    // The temperature is not pinned anywhere upstream; 0.1 is the customary
    // InfoNCE default at this feature scale.
    double tau = 0.1;
    PositionLossWeights position;
};

void check_loss_weights(const LossWeights& w);

/// Scalar summary of one total-loss evaluation. `total_t` keeps the tensor
/// alive for backward; the plain fields are for logging.
struct LossReport {
    Tensor total_t;
    double total = 0.0;
    double hungarian = 0.0;
    double contrastive = 0.0;
    std::vector<double> per_layer_aux;
    int matched_pairs = 0;
};

// Set loss over one matched prediction set: per target, -log of the matched
// prediction's probability for the target's class (two-class, so the
// "others" side is -log(1-p)), plus the position loss for repetitive
// targets. Probabilities are clamped to [1e-7, 1 - 1e-7] before the log.
Tensor hungarian_loss(const TargetSet& targets, const PredictionSet& preds,
                      const Assignment& assign, const PositionLossWeights& w);

// Queries with probability strictly above alpha form the positive set.
std::pair<std::vector<int>, std::vector<int>> icl_partition(const std::vector<double>& probs,
                                                            double alpha);

// InfoNCE over query features: each positive is attracted to the other
// positives and repelled from every negative. Rows are L2-normalized before
// the inner product so exp((D.D)/tau) cannot overflow. Fewer than two
// positives -> constant 0.
Tensor icl_loss(const Tensor& d_act, const std::vector<int>& positives,
                const std::vector<int>& negatives, double tau);

// Full training objective: an independent bipartite matching and Hungarian
// loss for the final prediction set and for every auxiliary set (non-final
// decoder layers and the encoder-side heads), plus the contrastive term on
// the final decoder features.
LossReport total_loss(const TargetSet& targets, const PredictionSet& final_preds,
                      const std::vector<PredictionSet>& aux_preds, const Tensor& decoder_act,
                      const LossWeights& weights, double alpha);

}  // namespace trc
