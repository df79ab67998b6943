#include "trc/metrics.hpp"

#include <cmath>
#include <cstdlib>

#include "trc/common.hpp"

namespace trc {

double obo(const std::vector<CountPair>& pairs) {
    if (pairs.empty()) throw ValidationError("obo: no sequences");
    int hits = 0;
    for (const CountPair& p : pairs)
        if (std::abs(p.predicted - p.expected) <= 1) ++hits;
    return static_cast<double>(hits) / pairs.size();
}

double mae(const std::vector<CountPair>& pairs, MaeDenominator denom) {
    if (pairs.empty()) throw ValidationError("mae: no sequences");
    double sum = 0.0;
    for (const CountPair& p : pairs) {
        const int d = denom == MaeDenominator::kGroundTruth ? p.expected : p.predicted;
        if (d < 1) throw ValidationError("mae: normalization count must be at least 1");
        sum += std::abs(p.predicted - p.expected) / static_cast<double>(d);
    }
    return sum / pairs.size();
}

MetricReport split_metrics(const std::vector<CountPair>& pairs,
                           const std::vector<PeriodClass>& classes, MaeDenominator denom) {
    if (pairs.size() != classes.size())
        throw ValidationError("split_metrics: one period class per sequence required");
    MetricReport rep;
    rep.m = static_cast<int>(pairs.size());
    rep.mae = mae(pairs, denom);
    rep.obo = obo(pairs);
    for (PeriodClass cls :
         {PeriodClass::kShort, PeriodClass::kMedium, PeriodClass::kLong}) {
        std::vector<CountPair> sub;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (classes[i] == cls) sub.push_back(pairs[i]);
        if (sub.empty()) continue;
        ClassMetrics cm{mae(sub, denom), obo(sub), static_cast<int>(sub.size())};
        if (cls == PeriodClass::kShort) rep.short_period = cm;
        if (cls == PeriodClass::kMedium) rep.medium_period = cm;
        if (cls == PeriodClass::kLong) rep.long_period = cm;
    }
    return rep;
}

std::vector<SweepRow> threshold_sweep(const std::vector<std::vector<double>>& probs,
                                      const std::vector<int>& expected,
                                      const std::vector<double>& alphas) {
    if (probs.size() != expected.size())
        throw ValidationError("threshold_sweep: one probability set per sequence required");
    if (probs.empty()) throw ValidationError("threshold_sweep: no sequences");
    std::vector<SweepRow> rows;
    rows.reserve(alphas.size());
    for (double alpha : alphas) {
        std::vector<CountPair> pairs(probs.size());
        for (std::size_t i = 0; i < probs.size(); ++i)
            pairs[i] = {QueryModel::count(probs[i], alpha), expected[i]};
        rows.push_back({alpha, mae(pairs), obo(pairs)});
    }
    return rows;
}

ComplexityRecord complexity_record(const ModelConfig& cfg, int t_frames) {
    ComplexityRecord rec;
    rec.t = t_frames;
    rec.model_macs = count_macs(cfg, t_frames);
    // TxT similarity matrix: a C-wide dot product per entry plus a fixed
    // 8-MAC per-entry processing stage (the downstream correlation filters).
    const std::uint64_t t = t_frames;
    rec.baseline_macs = t * t * (static_cast<std::uint64_t>(cfg.c) + 8);
    return rec;
}

}  // namespace trc
