#include "trc/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "trc/ops.hpp"

namespace trc {

namespace {
constexpr double kProbEps = 1e-7;
}

void check_loss_weights(const LossWeights& w) {
    check_position_weights(w.position);
    if (!std::isfinite(w.lambda_hungarian) || !std::isfinite(w.lambda_ctrs) ||
        w.lambda_hungarian < 0.0 || w.lambda_ctrs < 0.0)
        throw std::invalid_argument("loss weights: coefficients must be finite and >= 0");
    if (!(w.tau > 0.0) || !std::isfinite(w.tau))
        throw std::invalid_argument("loss weights: temperature must be positive");
}

Tensor hungarian_loss(const TargetSet& targets, const PredictionSet& preds,
                      const Assignment& assign, const PositionLossWeights& w) {
    check_targets(targets);
    check_predictions(preds);
    const int q = targets.size();
    if (preds.size() != q || static_cast<int>(assign.gt_to_pred.size()) != q)
        throw std::invalid_argument("hungarian_loss: size mismatch");

    // Class term as a two-class cross entropy in matched order.
    Tensor p_sel = select_rows(preds.probs, assign.gt_to_pred);
    Tensor p = clamp(p_sel, kProbEps, 1.0 - kProbEps);
    std::vector<double> cls(q);
    for (int i = 0; i < q; ++i) cls[i] = static_cast<double>(targets.classes[i]);
    Tensor c = Tensor::from({q}, cls);
    Tensor one_minus_c = Tensor::from({q}, std::vector<double>(q, 1.0));
    one_minus_c = sub(one_minus_c, c);
    Tensor log_p = log(p);
    Tensor log_not_p = log(sub(Tensor::full({q}, 1.0), p));
    Tensor class_term = scale(sum(add(mul(c, log_p), mul(one_minus_c, log_not_p))), -1.0);

    // Position term over matched repetitive pairs only.
    std::vector<int> rep_pred;
    std::vector<double> gt_md;
    for (int i = 0; i < q; ++i) {
        if (targets.classes[i] != 1) continue;
        rep_pred.push_back(assign.gt_to_pred[i]);
        gt_md.push_back(targets.locations[i].m);
        gt_md.push_back(targets.locations[i].d);
    }
    if (rep_pred.empty()) return class_term;
    Tensor pred_md = select_rows(preds.locations, rep_pred);
    Tensor gt = Tensor::from({static_cast<int>(rep_pred.size()), 2}, gt_md);
    return add(class_term, position_loss_rows(pred_md, gt, w));
}

std::pair<std::vector<int>, std::vector<int>> icl_partition(const std::vector<double>& probs,
                                                            double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("icl_partition: alpha must lie in (0,1)");
    std::vector<int> pos, neg;
    for (std::size_t i = 0; i < probs.size(); ++i)
        (probs[i] > alpha ? pos : neg).push_back(static_cast<int>(i));
    return {pos, neg};
}

Tensor icl_loss(const Tensor& d_act, const std::vector<int>& positives,
                const std::vector<int>& negatives, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("icl_loss: temperature must be positive");
    if (d_act.rank() != 2) throw std::invalid_argument("icl_loss: features must be Q x C");
    if (positives.size() < 2) return Tensor::scalar(0.0);

    const int q = d_act.rows();
    const int np = static_cast<int>(positives.size());
    Tensor d = l2_normalize_rows(d_act);
    Tensor dp = select_rows(d, positives);
    Tensor e = exp(scale(matmul(dp, transpose(d)), 1.0 / tau));  // [np x q]

    // Constant masks select "other positives" and "all negatives" per row.
    std::vector<double> pos_mask(static_cast<std::size_t>(np) * q, 0.0);
    std::vector<double> neg_mask(static_cast<std::size_t>(np) * q, 0.0);
    for (int r = 0; r < np; ++r) {
        for (int s : positives)
            if (s != positives[r]) pos_mask[static_cast<std::size_t>(r) * q + s] = 1.0;
        for (int s : negatives) neg_mask[static_cast<std::size_t>(r) * q + s] = 1.0;
    }
    Tensor lp = sum_axis(mul(e, Tensor::from({np, q}, pos_mask)), 1);
    Tensor ln = sum_axis(mul(e, Tensor::from({np, q}, neg_mask)), 1);
    // -log(lp / (lp + ln)); lp > 0 because a second positive always exists.
    return sum(sub(log(add(lp, ln)), log(lp)));
}

LossReport total_loss(const TargetSet& targets, const PredictionSet& final_preds,
                      const std::vector<PredictionSet>& aux_preds, const Tensor& decoder_act,
                      const LossWeights& weights, double alpha) {
    check_loss_weights(weights);

    LossReport report;
    report.matched_pairs = targets.true_count;

    // Every prediction set gets its own assignment against the shared targets.
    Assignment final_assign = match(targets, final_preds, weights.position);
    Tensor h_final = hungarian_loss(targets, final_preds, final_assign, weights.position);
    report.hungarian = h_final.item();

    Tensor h_sum = h_final;
    for (const PredictionSet& aux : aux_preds) {
        Assignment a = match(targets, aux, weights.position);
        Tensor h = hungarian_loss(targets, aux, a, weights.position);
        report.per_layer_aux.push_back(h.item());
        h_sum = add(h_sum, h);
    }

    std::vector<double> probs(final_preds.probs.values());
    auto [pos, neg] = icl_partition(probs, alpha);
    Tensor ctrs = icl_loss(decoder_act, pos, neg, weights.tau);
    report.contrastive = ctrs.item();

    Tensor total =
        add(scale(h_sum, weights.lambda_hungarian), scale(ctrs, weights.lambda_ctrs));
    report.total_t = total;
    report.total = total.item();
    return report;
}

}  // namespace trc
