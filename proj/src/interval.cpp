#include "trc/interval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trc/ops.hpp"

namespace trc {

void check_interval(const Interval& iv) {
    if (!std::isfinite(iv.m) || !std::isfinite(iv.d))
        throw std::invalid_argument("interval: non-finite fields");
    if (iv.d <= 0.0) throw std::invalid_argument("interval: duration must be positive");
}

void check_position_weights(const PositionLossWeights& w) {
    if (!std::isfinite(w.lambda_l1) || !std::isfinite(w.lambda_giou) || w.lambda_l1 < 0.0 ||
        w.lambda_giou < 0.0)
        throw std::invalid_argument("position weights: need finite nonnegative coefficients");
}

double iou_1d(const Interval& a, const Interval& b) {
    check_interval(a);
    check_interval(b);
    // Lengths are re-derived from endpoints so identical intervals give
    // exactly inter == union and therefore IoU == 1 in floating point.
    const double inter = std::max(0.0, std::min(a.end(), b.end()) - std::max(a.start(), b.start()));
    const double uni = (a.end() - a.start()) + (b.end() - b.start()) - inter;
    return inter / uni;
}

double giou_1d(const Interval& a, const Interval& b) {
    check_interval(a);
    check_interval(b);
    const double inter = std::max(0.0, std::min(a.end(), b.end()) - std::max(a.start(), b.start()));
    const double uni = (a.end() - a.start()) + (b.end() - b.start()) - inter;
    const double hull = std::max(a.end(), b.end()) - std::min(a.start(), b.start());
    return inter / uni - (hull - uni) / hull;
}

double position_loss(const Interval& pred, const Interval& gt, const PositionLossWeights& w) {
    check_position_weights(w);
    const double l1 = std::abs(pred.m - gt.m) + std::abs(pred.d - gt.d);
    return w.lambda_l1 * l1 + w.lambda_giou * (1.0 - giou_1d(pred, gt));
}

Tensor position_loss_rows(const Tensor& pred_md, const Tensor& gt_md,
                          const PositionLossWeights& w) {
    check_position_weights(w);
    if (pred_md.rank() != 2 || pred_md.cols() != 2 || gt_md.shape() != pred_md.shape())
        throw std::invalid_argument("position_loss_rows: need matching [M x 2] tensors");
    for (int r = 0; r < gt_md.rows(); ++r) {
        check_interval({pred_md.value(r, 0), pred_md.value(r, 1)});
        check_interval({gt_md.value(r, 0), gt_md.value(r, 1)});
    }

    Tensor l1 = sum(abs(sub(pred_md, gt_md)));

    // Interval arithmetic on tensors, one row per matched pair.
    Tensor pm = slice_cols(pred_md, 0, 1), pd = slice_cols(pred_md, 1, 2);
    Tensor gm = slice_cols(gt_md, 0, 1), gd = slice_cols(gt_md, 1, 2);
    Tensor ps = sub(pm, scale(pd, 0.5)), pe = add(pm, scale(pd, 0.5));
    Tensor gs = sub(gm, scale(gd, 0.5)), ge = add(gm, scale(gd, 0.5));
    Tensor inter = relu(sub(minimum(pe, ge), maximum(ps, gs)));
    Tensor uni = sub(add(sub(pe, ps), sub(ge, gs)), inter);
    Tensor hull = sub(maximum(pe, ge), minimum(ps, gs));
    Tensor giou = sub(div(inter, uni), div(sub(hull, uni), hull));
    Tensor giou_term = sum(sub(Tensor::full(giou.shape(), 1.0), giou));

    return add(scale(l1, w.lambda_l1), scale(giou_term, w.lambda_giou));
}

}  // namespace trc
