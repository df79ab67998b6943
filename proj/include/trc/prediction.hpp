#pragma once

#include <string>

#include "trc/interval.hpp"
#include "trc/tensor.hpp"

namespace trc {

/// One set of Q localized, classified queries as produced by a prediction
/// head. Tensors keep the gradient path alive for the losses; the accessors
/// give plain values for matching and metrics.
struct PredictionSet {
    Tensor probs;      // [Q], repetitive-class probability
    Tensor locations;  // [Q x 2], (midpoint, duration) rows
    std::string layer_tag;

    int size() const { return locations.defined() ? locations.rows() : 0; }
    double prob(int i) const { return probs.value(i); }
    Interval interval(int i) const { return {locations.value(i, 0), locations.value(i, 1)}; }
};

void check_predictions(const PredictionSet& preds);

}  // namespace trc
