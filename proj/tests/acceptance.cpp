// Release gate. Runs the nine acceptance criteria in order and prints exactly
// one PASS/FAIL line per criterion; the process exits nonzero if any fail.
// Every tolerance and benchmark constant is pinned here, in code.
//
// The desk benchmark (criteria 5, 6, 8) is fixed: generator master seed 1,
// 200/20/50 split, training seeds {1, 2, 3}. Thresholds were validated during
// bring-up; runtimes assume a single CPU core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "trc/common.hpp"
#include "trc/config_io.hpp"
#include "trc/losses.hpp"
#include "trc/matcher.hpp"
#include "trc/metrics.hpp"
#include "trc/model.hpp"
#include "trc/ops.hpp"
#include "trc/synth.hpp"
#include "trc/train.hpp"

using trc::Interval;
using trc::Rng;
using trc::Tensor;

namespace {

// ---------------------------------------------------------------- plumbing

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

struct Gate {
    int failures = 0;

    void report(int idx, bool ok, const std::string& detail) {
        std::printf("criterion %d: %s — %s\n", idx, ok ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

// Runs one criterion, converting exceptions into a FAIL line instead of
// aborting the gate: later criteria still get their verdicts.
void run_criterion(Gate& gate, int idx, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    gate.report(idx, ok, detail);
}

double median3(double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

Tensor randt(std::vector<int> shape, Rng& rng, double lo, double hi, bool rg = true) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(v), rg);
}

Tensor random_features(int t, int c_in, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(t) * c_in);
    for (double& x : v) x = rng.normal();
    return Tensor::from({t, c_in}, std::move(v));
}

// Scalar readout with non-uniform weights so FD exercises every entry.
Tensor readout(const Tensor& y, const Tensor& w) { return trc::sum(trc::mul(y, w)); }

// ------------------------------------------------- criterion 1: matching

bool criterion_matcher(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    int checked = 0;
    for (int q = 2; q <= 7; ++q) {
        Rng rng(trc::mix_seed(0xACCE97u, static_cast<std::uint64_t>(q)));
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> cost(static_cast<std::size_t>(q) * q);
            for (double& c : cost) c = rng.uniform(-1.0, 1.0);
            trc::Assignment got = trc::hungarian(cost, q);
            auto [best, assign] = oracle::brute_force_assignment(cost, q, q);
            double recomputed = 0.0;
            std::vector<bool> used(static_cast<std::size_t>(q), false);
            for (int r = 0; r < q; ++r) {
                const int col = got.gt_to_pred[static_cast<std::size_t>(r)];
                if (col < 0 || col >= q || used[static_cast<std::size_t>(col)]) {
                    detail = fmt("Q=%d trial %d: assignment is not a permutation", q, trial);
                    return false;
                }
                used[static_cast<std::size_t>(col)] = true;
                recomputed += cost[static_cast<std::size_t>(r) * q + col];
            }
            if (recomputed != got.total_cost || got.total_cost != best) {
                detail = fmt("Q=%d trial %d: solver %.17g vs exhaustive %.17g", q, trial,
                             got.total_cost, best);
                return false;
            }
            ++checked;
        }
    }
    const double dt = seconds_since(t0);
    detail = fmt("%d matrices exact (Q=2..7), %.1f s (limit 10 s)", checked, dt);
    return dt < 10.0;
}

// ------------------------------------------------ criterion 2: gradients

struct OpCheck {
    std::string name;
    std::function<double()> run;  // returns max relative FD error
};

double fd_err(const std::function<Tensor()>& build, std::vector<Tensor> params) {
    return oracle::check_gradients(build, std::move(params)).max_rel_err;
}

// A and B with a guaranteed elementwise gap, so max/min picks cannot flip
// under the probe step.
std::pair<Tensor, Tensor> separated_pair(Rng& rng) {
    Tensor a = randt({3, 4}, rng, -2.0, 2.0);
    std::vector<double> bv(a.numel());
    for (std::size_t i = 0; i < bv.size(); ++i)
        bv[i] = a.value(i) + (rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * rng.uniform(0.3, 1.0);
    return {a, Tensor::from({3, 4}, std::move(bv), true)};
}

// Values kept away from zero so abs/relu stay locally linear.
Tensor signed_off_zero(Rng& rng) {
    std::vector<double> v(12);
    for (double& x : v) x = (rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 2.0);
    return Tensor::from({3, 4}, std::move(v), true);
}

std::vector<OpCheck> op_battery() {
    std::vector<OpCheck> ops;
    auto unary = [&](const std::string& name, std::function<Tensor(const Tensor&)> f, double lo,
                     double hi) {
        ops.push_back({name, [=]() {
                           Rng rng(trc::mix_seed(0x0B5u, std::hash<std::string>{}(name)));
                           Tensor x = randt({3, 4}, rng, lo, hi);
                           // Readout weights take the op's output shape.
                           Tensor w = randt(f(x).shape(), rng, 0.5, 1.5, false);
                           return fd_err([&]() { return readout(f(x), w); }, {x});
                       }});
    };
    auto binary = [&](const std::string& name,
                      std::function<Tensor(const Tensor&, const Tensor&)> f, bool separated) {
        ops.push_back({name, [=]() {
                           Rng rng(trc::mix_seed(0x0B5u, std::hash<std::string>{}(name)));
                           Tensor a, b;
                           if (separated) {
                               std::tie(a, b) = separated_pair(rng);
                           } else {
                               a = randt({3, 4}, rng, -2.0, 2.0);
                               b = randt({3, 4}, rng, 0.5, 2.0);  // safe divisor
                           }
                           Tensor w = randt({3, 4}, rng, 0.5, 1.5, false);
                           return fd_err([&]() { return readout(f(a, b), w); }, {a, b});
                       }});
    };

    binary("add", [](const Tensor& a, const Tensor& b) { return trc::add(a, b); }, false);
    binary("sub", [](const Tensor& a, const Tensor& b) { return trc::sub(a, b); }, false);
    binary("mul", [](const Tensor& a, const Tensor& b) { return trc::mul(a, b); }, false);
    binary("div", [](const Tensor& a, const Tensor& b) { return trc::div(a, b); }, false);
    binary("maximum", [](const Tensor& a, const Tensor& b) { return trc::maximum(a, b); }, true);
    binary("minimum", [](const Tensor& a, const Tensor& b) { return trc::minimum(a, b); }, true);
    unary("scale", [](const Tensor& x) { return trc::scale(x, 1.7); }, -2.0, 2.0);
    unary("add_scalar", [](const Tensor& x) { return trc::add_scalar(x, 0.3); }, -2.0, 2.0);
    unary("gelu", [](const Tensor& x) { return trc::gelu(x); }, -2.0, 2.0);
    unary("exp", [](const Tensor& x) { return trc::exp(x); }, -1.5, 1.5);
    unary("log", [](const Tensor& x) { return trc::log(x); }, 0.2, 3.0);
    unary("sigmoid", [](const Tensor& x) { return trc::sigmoid(x); }, -2.0, 2.0);
    // Clamp bounds chosen so no value sits near a bound: both branches are
    // exercised, neither can flip under the probe.
    unary("clamp", [](const Tensor& x) { return trc::clamp(x, -1.0, 1.0); }, -0.8, 2.0);
    unary("reshape", [](const Tensor& x) { return trc::reshape(x, {2, 6}); }, -2.0, 2.0);
    unary("transpose", [](const Tensor& x) { return trc::transpose(x); }, -2.0, 2.0);
    unary("softmax_rows", [](const Tensor& x) { return trc::softmax(x, 1); }, -2.0, 2.0);
    unary("softmax_cols", [](const Tensor& x) { return trc::softmax(x, 0); }, -2.0, 2.0);
    unary("l2_normalize_rows", [](const Tensor& x) { return trc::l2_normalize_rows(x); }, 0.5,
          2.0);

    ops.push_back({"abs", []() {
                       Rng rng(11);
                       Tensor x = signed_off_zero(rng);
                       Tensor w = randt({3, 4}, rng, 0.5, 1.5, false);
                       return fd_err([&]() { return readout(trc::abs(x), w); }, {x});
                   }});
    ops.push_back({"relu", []() {
                       Rng rng(12);
                       Tensor x = signed_off_zero(rng);
                       Tensor w = randt({3, 4}, rng, 0.5, 1.5, false);
                       return fd_err([&]() { return readout(trc::relu(x), w); }, {x});
                   }});
    ops.push_back({"slice_cols", []() {
                       Rng rng(13);
                       Tensor x = randt({3, 5}, rng, -2.0, 2.0);
                       Tensor w = randt({3, 2}, rng, 0.5, 1.5, false);
                       return fd_err([&]() { return readout(trc::slice_cols(x, 1, 3), w); }, {x});
                   }});
    ops.push_back({"concat_cols", []() {
                       Rng rng(14);
                       Tensor a = randt({3, 2}, rng, -2.0, 2.0);
                       Tensor b = randt({3, 3}, rng, -2.0, 2.0);
                       Tensor w = randt({3, 5}, rng, 0.5, 1.5, false);
                       return fd_err([&]() { return readout(trc::concat_cols({a, b}), w); },
                                     {a, b});
                   }});
    // A repeated row index makes the backward accumulate, the harder path.
    ops.push_back({"select_rows", []() {
                       Rng rng(15);
                       Tensor x = randt({4, 3}, rng, -2.0, 2.0);
                       Tensor w = randt({3, 3}, rng, 0.5, 1.5, false);
                       return fd_err(
                           [&]() { return readout(trc::select_rows(x, {2, 0, 2}), w); }, {x});
                   }});
    ops.push_back({"sum", []() {
                       Rng rng(16);
                       Tensor x = randt({3, 4}, rng, -2.0, 2.0);
                       return fd_err([&]() { return trc::sum(x); }, {x});
                   }});
    ops.push_back({"sum_axis0", []() {
                       Rng rng(17);
                       Tensor x = randt({3, 4}, rng, -2.0, 2.0);
                       Tensor w = randt({4}, rng, 0.5, 1.5, false);
                       return fd_err([&]() { return readout(trc::sum_axis(x, 0), w); }, {x});
                   }});
    ops.push_back({"sum_axis1", []() {
                       Rng rng(18);
                       Tensor x = randt({3, 4}, rng, -2.0, 2.0);
                       Tensor w = randt({3}, rng, 0.5, 1.5, false);
                       return fd_err([&]() { return readout(trc::sum_axis(x, 1), w); }, {x});
                   }});
    ops.push_back({"matmul", []() {
                       Rng rng(19);
                       Tensor a = randt({3, 4}, rng, -1.0, 1.0);
                       Tensor b = randt({4, 2}, rng, -1.0, 1.0);
                       Tensor w = randt({3, 2}, rng, 0.5, 1.5, false);
                       return fd_err([&]() { return readout(trc::matmul(a, b), w); }, {a, b});
                   }});
    ops.push_back({"add_bias", []() {
                       Rng rng(20);
                       Tensor x = randt({3, 4}, rng, -2.0, 2.0);
                       Tensor b = randt({4}, rng, -1.0, 1.0);
                       Tensor w = randt({3, 4}, rng, 0.5, 1.5, false);
                       return fd_err([&]() { return readout(trc::add_bias(x, b), w); }, {x, b});
                   }});
    ops.push_back({"layer_norm", []() {
                       Rng rng(21);
                       Tensor x = randt({3, 4}, rng, -2.0, 2.0);
                       Tensor g = randt({4}, rng, 0.5, 1.5);
                       Tensor b = randt({4}, rng, -0.5, 0.5);
                       Tensor w = randt({3, 4}, rng, 0.5, 1.5, false);
                       return fd_err(
                           [&]() { return readout(trc::layer_norm(x, g, b, 1e-5), w); },
                           {x, g, b});
                   }});
    // The two banded kernels validated through their natural composition;
    // out-of-range slots carry a constant filler with zero derivative.
    ops.push_back({"windowed_attention", []() {
                       Rng rng(22);
                       const int t = 6, w = 2;
                       Tensor q = randt({t, 3}, rng, -1.0, 1.0);
                       Tensor k = randt({t, 3}, rng, -1.0, 1.0);
                       Tensor v = randt({t, 3}, rng, -1.0, 1.0);
                       Tensor wo = randt({t, 3}, rng, 0.5, 1.5, false);
                       return fd_err(
                           [&]() {
                               Tensor p = trc::softmax(trc::windowed_scores(q, k, w), 1);
                               return readout(trc::windowed_weighted_sum(p, v, w), wo);
                           },
                           {q, k, v});
                   }});
    return ops;
}

// Best-vs-second-best gap of assigning the two real targets to an ordered
// prediction pair; a healthy margin means FD probes cannot flip the matching.
double assignment_margin(const trc::TargetSet& targets, const trc::PredictionSet& preds,
                         const trc::PositionLossWeights& w) {
    std::vector<int> real;
    for (int i = 0; i < targets.size(); ++i)
        if (targets.classes[i] == 1) real.push_back(i);
    double best = std::numeric_limits<double>::infinity(), second = best;
    for (int j1 = 0; j1 < preds.size(); ++j1)
        for (int j2 = 0; j2 < preds.size(); ++j2) {
            if (j1 == j2) continue;
            const double c = trc::matching_cost(1, targets.locations[real[0]], preds.prob(j1),
                                                preds.interval(j1), w) +
                             trc::matching_cost(1, targets.locations[real[1]], preds.prob(j2),
                                                preds.interval(j2), w);
            if (c < best) {
                second = best;
                best = c;
            } else if (c < second) {
                second = c;
            }
        }
    return second - best;
}

bool criterion_gradients(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();

    double worst_op = 0.0;
    std::string worst_name = "-";
    for (const OpCheck& op : op_battery()) {
        const double err = op.run();
        if (err > worst_op) {
            worst_op = err;
            worst_name = op.name;
        }
        if (err >= 1e-4) {
            detail = fmt("op %s relative error %.3g (limit 1e-4)", op.name.c_str(), err);
            return false;
        }
    }

    // Composed check: the full training objective on a desk model. The
    // forward pass contains discrete stages (top-Q selection, bipartite
    // matching, the contrastive partition); pick a seed where every discrete
    // choice has a margin that cannot flip under the probe step.
    trc::ModelConfig cfg;
    cfg.t = 32;
    cfg.c_in = 3;
    cfg.c = 8;
    cfg.heads = 2;
    cfg.l_enc = 1;
    cfg.l_dec = 1;
    cfg.q = 4;
    cfg.window = 4;
    cfg.ffn_mult = 2;

    const std::vector<Interval> cycles = {{0.3, 0.22}, {0.7, 0.24}};
    trc::TargetSet targets = trc::pad_targets(cycles, cfg.q);
    trc::TargetSet enc_targets = trc::pad_targets(cycles, cfg.t);
    trc::LossWeights weights;

    std::uint64_t seed = 0;
    Tensor x;
    for (std::uint64_t s = 1; s < 60 && seed == 0; ++s) {
        trc::QueryModel probe(cfg, s);
        Tensor xs = random_features(cfg.t, cfg.c_in, 1000 + s);
        auto res = probe.forward(xs);

        auto enc = probe.encode(probe.embed_input(xs));
        auto sel = probe.select_queries(enc);
        std::vector<double> p = sel.aux.probs.values();
        std::sort(p.begin(), p.end(), std::greater<>());
        double rank_margin = p[cfg.q - 1] - p[cfg.q];
        for (int i = 1; i < cfg.q; ++i) rank_margin = std::min(rank_margin, p[i - 1] - p[i]);

        double alpha_margin = 1.0;
        for (double pr : res.final.probs.values())
            alpha_margin = std::min(alpha_margin, std::abs(pr - cfg.alpha));

        double match_margin = assignment_margin(targets, res.final, weights.position);
        for (const auto& aux : res.aux)
            match_margin = std::min(match_margin, assignment_margin(targets, aux, weights.position));
        match_margin = std::min(match_margin,
                                assignment_margin(enc_targets, res.encoder_aux, weights.position));

        if (rank_margin > 5e-3 && alpha_margin > 5e-3 && match_margin > 1e-2) {
            seed = s;
            x = xs;
        }
    }
    if (seed == 0) {
        detail = "no seed with stable discrete choices found";
        return false;
    }

    trc::QueryModel model(cfg, seed);
    if (model.parameter_count() >= 5000) {
        detail = fmt("desk model has %zu parameters (limit 5000)", model.parameter_count());
        return false;
    }

    auto build = [&]() {
        auto res = model.forward(x);
        trc::LossReport report =
            trc::total_loss(targets, res.final, res.aux, res.decoder_act, weights, cfg.alpha);
        trc::Assignment enc_assign = trc::match(enc_targets, res.encoder_aux, weights.position);
        Tensor enc_term =
            trc::hungarian_loss(enc_targets, res.encoder_aux, enc_assign, weights.position);
        return trc::add(report.total_t, enc_term);
    };
    auto result = oracle::check_gradients(build, model.parameters(), 1e-4);

    const double dt = seconds_since(t0);
    detail = fmt("worst op %s %.2g (limit 1e-4), composed %.2g over %zu params (limit 1e-3), "
                 "%.1f s (limit 120 s)",
                 worst_name.c_str(), worst_op, result.max_rel_err, model.parameter_count(), dt);
    return result.max_rel_err < 1e-3 && dt < 120.0;
}

// ------------------------------------------------- criterion 3: geometry

bool criterion_geometry(std::string& detail) {
    Rng rng(0x6E0u);
    for (int trial = 0; trial < 10000; ++trial) {
        Interval a{rng.uniform(0.0, 1.0), rng.uniform(0.01, 1.0)};
        Interval b{rng.uniform(0.0, 1.0), rng.uniform(0.01, 1.0)};
        const double iou = trc::iou_1d(a, b);
        const double giou = trc::giou_1d(a, b);
        if (iou != trc::iou_1d(b, a) || giou != trc::giou_1d(b, a)) {
            detail = fmt("trial %d: not symmetric", trial);
            return false;
        }
        if (giou > iou + 1e-12) {
            detail = fmt("trial %d: gIoU %.17g exceeds IoU %.17g", trial, giou, iou);
            return false;
        }
        if (iou < 0.0 || iou > 1.0 || giou <= -1.0 || giou > 1.0) {
            detail = fmt("trial %d: out of bounds (iou %.17g, giou %.17g)", trial, iou, giou);
            return false;
        }
    }
    // Hand-derived fixtures: (0.2,0.4) vs (0.3,0.5) overlap exactly 1/3;
    // (0,0.1) vs (0.9,1.0) is the disjoint -0.8 case.
    const double third = trc::iou_1d(Interval{0.3, 0.2}, Interval{0.4, 0.2});
    const double disj = trc::giou_1d(Interval{0.05, 0.1}, Interval{0.95, 0.1});
    if (std::abs(third - 1.0 / 3.0) >= 1e-9 || std::abs(disj - (-0.8)) >= 1e-9) {
        detail = fmt("fixtures off: overlap %.12f (want 1/3), disjoint %.12f (want -0.8)",
                     third, disj);
        return false;
    }
    detail = "10000 pairs: symmetry, gIoU <= IoU, bounds, fixtures to 1e-9";
    return true;
}

// -------------------------------------------------- criterion 4: overfit

bool criterion_overfit(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();

    trc::RunConfig rc;  // desk defaults
    rc.epochs = 500;
    rc.n_train = 8;
    rc.n_val = 0;
    rc.n_test = 0;
    rc.seed = 1;
    trc::check_run_config(rc);

    trc::SplitSet split = trc::generate_split(rc.generator, rc.n_train, rc.n_val, rc.n_test);
    trc::TrainResult result = trc::train_model(rc, split.train, split.val);
    trc::MetricReport train_report =
        trc::evaluate_model(result.model, split.train, rc.model.alpha);

    const double dt = seconds_since(t0);
    detail = fmt("8 sequences, 500 epochs: train OBO %.4f (need 1.0), MAE %.4f (limit 0.1), "
                 "best epoch %d, %.0f s (limit 600 s)",
                 train_report.obo, train_report.mae, result.best_epoch, dt);
    return train_report.obo == 1.0 && train_report.mae < 0.1 && dt < 600.0;
}

// --------------------------------- criteria 5, 6, 8: the desk benchmark

struct BenchRun {
    double obo = 0.0;
    double mae = 0.0;
};

// The fixed desk benchmark, tuned during bring-up: fairly crowded sequences
// (4-8 cycles of 8-24 frames) keep borderline-but-real detections in the
// mid-confidence band, which the threshold-robustness criterion needs, while
// lr 3e-4 keeps desk-scale training stable (1e-3 oscillates).
constexpr int kBenchEpochs = 80;
constexpr std::uint64_t kBenchSeeds[3] = {1, 2, 3};

trc::RunConfig bench_config(std::uint64_t seed) {
    trc::RunConfig rc;  // desk model: T=128, C=64, Q=16, batch 8
    rc.epochs = kBenchEpochs;
    rc.lr = 3e-4;
    rc.seed = seed;
    rc.generator.count_min = 4;
    rc.generator.count_max = 8;
    rc.generator.period_min = 8;
    rc.generator.period_max = 24;
    rc.generator.interruption_probability = 0.25;
    rc.generator.master_seed = 1;
    trc::check_run_config(rc);
    return rc;
}

BenchRun run_bench(const trc::RunConfig& rc, const trc::SplitSet& split,
                   trc::QueryModel* keep_model = nullptr) {
    trc::TrainResult result = trc::train_model(rc, split.train, split.val);
    trc::MetricReport report = trc::evaluate_model(result.model, split.test, rc.model.alpha);
    if (keep_model) *keep_model = result.model;
    return {report.obo, report.mae};
}

struct BenchState {
    trc::SplitSet split;
    BenchRun full[3];
    std::vector<trc::QueryModel> models;  // full-model runs, seed order
    bool ready = false;
};

bool criterion_generalization(std::string& detail, BenchState& bench) {
    const auto t0 = std::chrono::steady_clock::now();

    bench.split = trc::generate_split(bench_config(1).generator, 200, 20, 50);
    for (int i = 0; i < 3; ++i) {
        trc::QueryModel model(bench_config(kBenchSeeds[i]).model, 0);
        bench.full[i] = run_bench(bench_config(kBenchSeeds[i]), bench.split, &model);
        bench.models.push_back(std::move(model));
    }
    bench.ready = true;

    const double obo = median3(bench.full[0].obo, bench.full[1].obo, bench.full[2].obo);
    const double mae = median3(bench.full[0].mae, bench.full[1].mae, bench.full[2].mae);
    const double dt = seconds_since(t0);
    detail = fmt("median over seeds {1,2,3}: test OBO %.4f (need >= 0.6), MAE %.4f "
                 "(limit 0.35) at alpha 0.2; per-seed OBO %.2f/%.2f/%.2f; %.0f s (limit 3600 s)",
                 obo, mae, bench.full[0].obo, bench.full[1].obo, bench.full[2].obo, dt);
    return obo >= 0.6 && mae <= 0.35 && dt < 3600.0;
}

bool criterion_ablations(std::string& detail, const BenchState& bench) {
    if (!bench.ready) {
        detail = "skipped: the criterion-5 benchmark did not run";
        return false;
    }
    auto ablation_mae = [&](bool daq, bool icl) {
        double mae[3];
        for (int i = 0; i < 3; ++i) {
            trc::RunConfig rc = bench_config(kBenchSeeds[i]);
            rc.model.use_daq = daq;
            rc.model.use_icl = icl;
            mae[i] = run_bench(rc, bench.split).mae;
        }
        return median3(mae[0], mae[1], mae[2]);
    };

    const double full = median3(bench.full[0].mae, bench.full[1].mae, bench.full[2].mae);
    const double no_daq = ablation_mae(false, true);
    const double no_icl = ablation_mae(true, false);

    detail = fmt("median test MAE: full %.4f vs static queries %.4f, no contrastive %.4f "
                 "(full must not exceed either)",
                 full, no_daq, no_icl);
    return full <= no_daq && full <= no_icl;
}

bool criterion_thresholds(std::string& detail, const BenchState& bench) {
    if (!bench.ready) {
        detail = "skipped: the criterion-5 benchmark did not run";
        return false;
    }
    // The run with the median OBO is "the criterion-5 model".
    int mid = 0;
    const double med = median3(bench.full[0].obo, bench.full[1].obo, bench.full[2].obo);
    for (int i = 0; i < 3; ++i)
        if (bench.full[i].obo == med) {
            mid = i;
            break;
        }

    std::vector<std::vector<double>> probs;
    std::vector<int> expected;
    for (const trc::SequenceSample& s : bench.split.test) {
        probs.push_back(trc::sequence_probs(bench.models[static_cast<std::size_t>(mid)], s));
        expected.push_back(s.true_count());
    }
    std::vector<trc::SweepRow> rows =
        trc::threshold_sweep(probs, expected, {0.2, 0.3, 0.4, 0.7});

    double spread = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            spread = std::max(spread, std::abs(rows[i].obo - rows[j].obo));

    detail = fmt("seed %llu model: OBO %.3f/%.3f/%.3f at alpha 0.2/0.3/0.4 (spread %.3f, "
                 "limit 0.1); OBO %.3f at 0.7 must stay below %.3f",
                 static_cast<unsigned long long>(kBenchSeeds[mid]), rows[0].obo, rows[1].obo,
                 rows[2].obo, spread, rows[3].obo, rows[1].obo);
    return spread <= 0.1 && rows[3].obo < rows[1].obo;
}

// ----------------------------------------------- criterion 7: complexity

bool criterion_complexity(std::string& detail) {
    const trc::ModelConfig cfg = bench_config(1).model;
    const std::vector<int> lengths = {64, 128, 256, 512};

    std::vector<trc::ComplexityRecord> recs;
    for (int t : lengths) recs.push_back(trc::complexity_record(cfg, t));

    // Least-squares affine fit of model MACs against T.
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (const auto& r : recs) {
        const double t = r.t, y = static_cast<double>(r.model_macs);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double n = static_cast<double>(recs.size());
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    const double intercept = (sy - slope * st) / n;
    double ss_res = 0, ss_tot = 0;
    for (const auto& r : recs) {
        const double y = static_cast<double>(r.model_macs);
        ss_res += std::pow(y - (slope * r.t + intercept), 2);
        ss_tot += std::pow(y - sy / n, 2);
    }
    const double r2 = 1.0 - ss_res / ss_tot;

    const double model_ratio = static_cast<double>(recs.back().model_macs) /
                               static_cast<double>(recs.front().model_macs);
    const double base_ratio = static_cast<double>(recs.back().baseline_macs) /
                              static_cast<double>(recs.front().baseline_macs);

    detail = fmt("R^2 %.6f (need > 0.999), model 512/64 ratio %.2f (limit 9), "
                 "similarity baseline ratio %.0f (must equal 64 exactly)",
                 r2, model_ratio, base_ratio);
    return r2 > 0.999 && model_ratio <= 9.0 && base_ratio == 64.0;
}

// ------------------------------------ criterion 9: determinism via the CLI

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing:" + path + ">";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool shell(const std::string& cmd) { return std::system(cmd.c_str()) == 0; }

bool criterion_determinism(std::string& detail) {
    char tmpl[] = "/tmp/trc-acceptance-XXXXXX";
    if (!mkdtemp(tmpl)) {
        detail = "could not create a scratch directory";
        return false;
    }
    const std::string dir = tmpl;
    // Small but complete run: every stage still executes end to end.
    const std::string cfg = dir + "/run.json";
    {
        std::ofstream out(cfg);
        out << R"({
  "model": {"t": 32, "c_in": 4, "c": 16, "heads": 2, "l_enc": 1, "l_dec": 1,
             "q": 6, "window": 8, "ffn_mult": 2},
  "generator": {"t": 32, "c_in": 4, "count_min": 1, "count_max": 3,
                 "period_min": 4, "period_max": 10, "master_seed": 5},
  "optimizer": {"epochs": 3, "batch_size": 4, "lr": 0.001},
  "splits": {"train": 8, "val": 4, "test": 4},
  "seed": 9
})";
    }
    const std::string bin = TRC_BIN;
    auto stage = [&](const std::string& sub, const std::string& out_dir) {
        return shell(bin + " " + sub + " --config " + cfg + " --out " + out_dir +
                     " > /dev/null");
    };
    const std::string d1 = dir + "/a", d2 = dir + "/b";
    if (!stage("generate", d1) || !stage("generate", d2) || !stage("train", d1) ||
        !stage("train", d2)) {
        detail = "a CLI stage exited nonzero (scratch " + dir + ")";
        return false;
    }

    const bool logs_equal =
        file_bytes(d1 + "/train_log.csv") == file_bytes(d2 + "/train_log.csv");
    const bool ckpt_equal =
        file_bytes(d1 + "/checkpoint.trck") == file_bytes(d2 + "/checkpoint.trck");

    // Reload the checkpoint twice; evaluation must reproduce byte-identically.
    auto eval_to = [&](const std::string& out) {
        return shell(bin + " eval --checkpoint " + d1 + "/checkpoint.trck --data " + d1 +
                     "/test.trc --out " + out + " > /dev/null");
    };
    if (!eval_to(dir + "/e1.csv") || !eval_to(dir + "/e2.csv")) {
        detail = "evaluation exited nonzero (scratch " + dir + ")";
        return false;
    }
    const bool eval_equal = file_bytes(dir + "/e1.csv") == file_bytes(dir + "/e2.csv");

    detail = fmt("repeated runs: train log %s, checkpoint %s, reloaded eval CSV %s",
                 logs_equal ? "identical" : "DIFFER", ckpt_equal ? "identical" : "DIFFER",
                 eval_equal ? "identical" : "DIFFER");
    const bool ok = logs_equal && ckpt_equal && eval_equal;
    if (ok) shell("rm -rf " + dir);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments restrict the run to the listed criteria (debugging
    // aid); no arguments runs the whole gate.
    bool wanted[10];
    std::fill(std::begin(wanted), std::end(wanted), argc <= 1);
    for (int i = 1; i < argc; ++i) {
        const int k = std::atoi(argv[i]);
        if (k < 1 || k > 9) {
            std::fprintf(stderr, "usage: %s [criterion 1-9]...\n", argv[0]);
            return 2;
        }
        wanted[k] = true;
    }

    Gate gate;
    BenchState bench;

    if (wanted[1]) run_criterion(gate, 1, criterion_matcher);
    if (wanted[2]) run_criterion(gate, 2, criterion_gradients);
    if (wanted[3]) run_criterion(gate, 3, criterion_geometry);
    if (wanted[4]) run_criterion(gate, 4, criterion_overfit);
    if (wanted[5])
        run_criterion(gate, 5,
                      [&](std::string& d) { return criterion_generalization(d, bench); });
    if (wanted[6])
        run_criterion(gate, 6, [&](std::string& d) { return criterion_ablations(d, bench); });
    if (wanted[7]) run_criterion(gate, 7, criterion_complexity);
    if (wanted[8])
        run_criterion(gate, 8, [&](std::string& d) { return criterion_thresholds(d, bench); });
    if (wanted[9]) run_criterion(gate, 9, criterion_determinism);

    if (gate.failures) std::printf("%d criterion(s) failed\n", gate.failures);
    return gate.failures ? 1 : 0;
}
