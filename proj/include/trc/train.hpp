#pragma once

#include <vector>

#include "trc/config_io.hpp"
#include "trc/metrics.hpp"
#include "trc/model.hpp"
#include "trc/synth.hpp"

namespace trc {

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;         // mean per-sequence total
    double hungarian = 0.0;    // mean set-loss component (all supervised sets)
    double contrastive = 0.0;  // mean contrastive component
    double val_obo = 0.0;
    double val_mae = 0.0;
};

struct TrainResult {
    QueryModel model;  // carries the best-validation weights
    int best_epoch = -1;
    double best_obo = 0.0;
    double best_mae = 0.0;
    std::vector<EpochLog> log;
};

/// Loss of one sequence under an ambient tape: the matched set loss over the
/// final predictions, every auxiliary decoder layer, and the encoder tokens,
/// plus the contrastive term on the final decoder features.
struct SequenceLoss {
    Tensor total;
    double hungarian = 0.0;
    double contrastive = 0.0;
};
SequenceLoss sequence_loss(const QueryModel& model, const SequenceSample& sample,
                           const LossWeights& weights, double alpha);

/// Forward pass without a tape; returns the final per-query probabilities.
std::vector<double> sequence_probs(const QueryModel& model, const SequenceSample& sample);

MetricReport evaluate_model(const QueryModel& model, const std::vector<SequenceSample>& data,
                            double alpha, MaeDenominator denom = MaeDenominator::kGroundTruth);

/// Mini-batch AdamW over the full objective. Keeps the weights of the epoch
/// with the best validation OBO (ties: lower MAE, then the later epoch). An
/// empty validation set falls back to validating on the training set, which
/// is exactly what the overfit preset wants.
TrainResult train_model(const RunConfig& cfg, const std::vector<SequenceSample>& train_set,
                        const std::vector<SequenceSample>& val_set);

}  // namespace trc
