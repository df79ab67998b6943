#pragma once

#include "trc/tensor.hpp"

namespace trc {

/// One temporal segment in normalized time, parameterized by midpoint and
/// duration (both fractions of the sequence length). Endpoints may leave
/// [0, 1] transiently during training; duration must stay positive.
struct Interval {
    double m = 0.0;
    double d = 0.0;

    double start() const { return m - d / 2.0; }
    double end() const { return m + d / 2.0; }
};

struct PositionLossWeights {
    double lambda_l1 = 5.0;
    double lambda_giou = 0.4;
};

// Contract checks; throw std::invalid_argument.
void check_interval(const Interval& iv);
void check_position_weights(const PositionLossWeights& w);

// Plain 1-D overlap measures on the endpoint representation. No clamping:
// raw endpoints keep gradients informative when a head drifts outside [0,1].
double iou_1d(const Interval& a, const Interval& b);
double giou_1d(const Interval& a, const Interval& b);

// lambda_l1 * (|m - m'| + |d - d'|) + lambda_giou * (1 - gIoU). Scalar fast
// path, used by the matcher where no gradients are needed.
double position_loss(const Interval& pred, const Interval& gt, const PositionLossWeights& w);

// Differentiable variant summed over rows. pred_md and gt_md are [M x 2]
// (midpoint, duration) tensors; gradients flow into pred_md only if gt_md
// does not require them (targets are constants in practice).
Tensor position_loss_rows(const Tensor& pred_md, const Tensor& gt_md,
                          const PositionLossWeights& w);

}  // namespace trc
