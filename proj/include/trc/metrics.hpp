#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "trc/model.hpp"
#include "trc/synth.hpp"

namespace trc {

/// One evaluated sequence: predicted count N against ground truth count.
struct CountPair {
    int predicted = 0;
    int expected = 0;
};

/// Fraction of sequences counted within one of the truth (inclusive).
double obo(const std::vector<CountPair>& pairs);

enum class MaeDenominator { kGroundTruth, kPredicted };

/// Mean of |N - truth| / denominator. Ground-truth normalization is the
/// default; the predicted-count variant exists for comparison and rejects
/// zero predictions, where it is undefined.
double mae(const std::vector<CountPair>& pairs,
           MaeDenominator denom = MaeDenominator::kGroundTruth);

struct ClassMetrics {
    double mae = 0.0;
    double obo = 0.0;
    int m = 0;
};

struct MetricReport {
    double mae = 0.0;
    double obo = 0.0;
    int m = 0;
    // Absent (not zero) when no sequence falls in the class.
    std::optional<ClassMetrics> short_period, medium_period, long_period;
};

MetricReport split_metrics(const std::vector<CountPair>& pairs,
                           const std::vector<PeriodClass>& classes,
                           MaeDenominator denom = MaeDenominator::kGroundTruth);

struct SweepRow {
    double alpha = 0.0;
    double mae = 0.0;
    double obo = 0.0;
};

/// Re-thresholds cached per-sequence probabilities; no forward pass runs.
std::vector<SweepRow> threshold_sweep(const std::vector<std::vector<double>>& probs,
                                      const std::vector<int>& expected,
                                      const std::vector<double>& alphas);

struct ComplexityRecord {
    int t = 0;
    std::uint64_t model_macs = 0;
    std::uint64_t baseline_macs = 0;
};

/// Analytic cost of one query-model forward pass next to a reference
/// pipeline that fills a TxT frame-similarity matrix (C MACs per entry for
/// the dot product, plus a small fixed per-entry processing cost).
ComplexityRecord complexity_record(const ModelConfig& cfg, int t_frames);

}  // namespace trc
