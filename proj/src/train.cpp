#include "trc/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trc/adamw.hpp"
#include "trc/common.hpp"
#include "trc/losses.hpp"
#include "trc/matcher.hpp"
#include "trc/ops.hpp"

namespace trc {

SequenceLoss sequence_loss(const QueryModel& model, const SequenceSample& sample,
                           const LossWeights& weights, double alpha) {
    const int t = sample.features.rows();
    QueryModel::ForwardResult res = model.forward(sample.features);

    TargetSet targets = pad_targets(sample.cycles, model.config().q);
    LossReport report = total_loss(targets, res.final, res.aux, res.decoder_act, weights, alpha);

    // The encoder-side heads score every token, so their set loss runs
    // against targets padded to T rather than Q.
    TargetSet enc_targets = pad_targets(sample.cycles, t);
    Assignment enc_assign = match(enc_targets, res.encoder_aux, weights.position);
    Tensor enc_term = hungarian_loss(enc_targets, res.encoder_aux, enc_assign, weights.position);

    SequenceLoss out;
    out.total = add(report.total_t, scale(enc_term, weights.lambda_hungarian));
    out.hungarian = report.hungarian + enc_term.item();
    for (double aux : report.per_layer_aux) out.hungarian += aux;
    out.contrastive = report.contrastive;
    return out;
}

std::vector<double> sequence_probs(const QueryModel& model, const SequenceSample& sample) {
    return model.forward(sample.features).final.probs.values();
}

MetricReport evaluate_model(const QueryModel& model, const std::vector<SequenceSample>& data,
                            double alpha, MaeDenominator denom) {
    std::vector<CountPair> pairs;
    std::vector<PeriodClass> classes;
    for (const SequenceSample& s : data) {
        pairs.push_back({QueryModel::count(sequence_probs(model, s), alpha), s.true_count()});
        classes.push_back(s.period_class);
    }
    return split_metrics(pairs, classes, denom);
}

TrainResult train_model(const RunConfig& cfg, const std::vector<SequenceSample>& train_set,
                        const std::vector<SequenceSample>& val_set) {
    check_run_config(cfg);
    if (train_set.empty() && cfg.epochs > 0)
        throw ValidationError("train: no training sequences");

    TrainResult result{QueryModel(cfg.model, cfg.seed)};
    QueryModel& model = result.model;

    LossWeights weights = cfg.loss;
    if (!cfg.model.use_icl) weights.lambda_ctrs = 0.0;

    AdamWConfig acfg;
    acfg.lr = cfg.lr;
    acfg.weight_decay = cfg.weight_decay;
    AdamW opt(model.parameters(), acfg);

    const std::vector<SequenceSample>& val_ref = val_set.empty() ? train_set : val_set;

    Rng shuffle_rng(mix_seed(cfg.seed, 0x73687566ULL));  // epoch shuffling stream
    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    double best_obo = -1.0, best_mae = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_values;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);

        double sum_loss = 0.0, sum_h = 0.0, sum_c = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            Tape tape;
            TapeScope scope(tape);
            Tensor batch_total;
            for (std::size_t k = start; k < stop; ++k) {
                SequenceLoss sl =
                    sequence_loss(model, train_set[order[k]], weights, cfg.model.alpha);
                batch_total = batch_total.defined() ? add(batch_total, sl.total) : sl.total;
                sum_loss += sl.total.item();
                sum_h += sl.hungarian;
                sum_c += sl.contrastive;
            }
            tape.backward(scale(batch_total, 1.0 / static_cast<double>(stop - start)));
            opt.step();
            opt.zero_grad();
        }

        MetricReport val = evaluate_model(model, val_ref, cfg.model.alpha);
        EpochLog entry;
        entry.epoch = epoch;
        entry.loss = sum_loss / train_set.size();
        entry.hungarian = sum_h / train_set.size();
        entry.contrastive = sum_c / train_set.size();
        entry.val_obo = val.obo;
        entry.val_mae = val.mae;
        result.log.push_back(entry);

        const bool better = val.obo > best_obo || (val.obo == best_obo && val.mae < best_mae) ||
                            (val.obo == best_obo && val.mae == best_mae);
        if (better) {
            best_obo = val.obo;
            best_mae = val.mae;
            result.best_epoch = epoch;
            best_values.clear();
            for (const auto& [name, t] : model.named_parameters())
                best_values.push_back(t.values());
        }
    }

    if (result.best_epoch >= 0) {
        const auto& params = model.named_parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor t = params[i].second;
            t.values() = best_values[i];
        }
        result.best_obo = best_obo;
        result.best_mae = best_mae;
    }
    return result;
}

}  // namespace trc
