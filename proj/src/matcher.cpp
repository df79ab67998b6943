#include "trc/matcher.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace trc {

void check_targets(const TargetSet& targets) {
    if (targets.classes.size() != targets.locations.size())
        throw std::invalid_argument("targets: classes/locations length mismatch");
    int ones = 0;
    for (std::size_t i = 0; i < targets.classes.size(); ++i) {
        const int c = targets.classes[i];
        if (c != 0 && c != 1) throw std::invalid_argument("targets: class must be 0 or 1");
        if (c == 1) {
            check_interval(targets.locations[i]);
            ++ones;
        }
    }
    if (ones != targets.true_count)
        throw std::invalid_argument("targets: true_count does not match repetitive entries");
}

void check_predictions(const PredictionSet& preds) {
    if (!preds.probs.defined() || !preds.locations.defined())
        throw std::invalid_argument("predictions: missing tensors");
    if (preds.probs.rank() != 1 || preds.locations.rank() != 2 || preds.locations.cols() != 2 ||
        preds.probs.dim(0) != preds.locations.rows())
        throw std::invalid_argument("predictions: need probs [Q] and locations [Q x 2]");
    for (int i = 0; i < preds.size(); ++i) {
        const double p = preds.prob(i);
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("predictions: probability outside [0,1]");
        check_interval(preds.interval(i));
    }
}

TargetSet pad_targets(const std::vector<Interval>& cycles, int q) {
    if (static_cast<int>(cycles.size()) > q)
        throw std::invalid_argument("pad_targets: more cycles than query slots");
    TargetSet t;
    t.true_count = static_cast<int>(cycles.size());
    t.classes.assign(q, 0);
    t.locations.assign(q, Interval{0.5, 1.0});  // placeholder for padding slots
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        t.classes[i] = 1;
        t.locations[i] = cycles[i];
    }
    check_targets(t);
    return t;
}

double matching_cost(int gt_class, const Interval& gt_loc, double pred_prob,
                     const Interval& pred_loc, const PositionLossWeights& w) {
    if (gt_class == 0) return 0.0;
    if (gt_class != 1) throw std::invalid_argument("matching_cost: class must be 0 or 1");
    if (!(pred_prob >= 0.0 && pred_prob <= 1.0))
        throw std::invalid_argument("matching_cost: probability outside [0,1]");
    return -pred_prob + position_loss(pred_loc, gt_loc, w);
}

std::vector<double> build_cost_matrix(const TargetSet& targets, const PredictionSet& preds,
                                      const PositionLossWeights& w) {
    check_targets(targets);
    check_predictions(preds);
    const int q = targets.size();
    if (preds.size() != q)
        throw std::invalid_argument("build_cost_matrix: target/prediction size mismatch");
    std::vector<double> cost(static_cast<std::size_t>(q) * q, 0.0);
    for (int i = 0; i < q; ++i) {
        if (targets.classes[i] == 0) continue;  // constant 0 row
        for (int j = 0; j < q; ++j)
            cost[static_cast<std::size_t>(i) * q + j] =
                matching_cost(1, targets.locations[i], preds.prob(j), preds.interval(j), w);
    }
    return cost;
}

Assignment hungarian(const std::vector<double>& cost, int n) {
    if (n <= 0 || cost.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("hungarian: cost matrix is not n x n");
    for (double c : cost)
        if (!std::isfinite(c)) throw std::invalid_argument("hungarian: non-finite cost entry");

    // Augmenting-path shortest-path variant with row/column potentials.
    // Column n is the virtual start; p[j] is the row matched to column j
    // (n = free). Strict < comparisons make the lowest column index win ties.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, n);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, n);
    for (int i = 0; i < n; ++i) {
        p[n] = i;
        int j0 = n;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 0; j < n; ++j) {
                if (used[j]) continue;
                const double cur = cost[static_cast<std::size_t>(i0) * n + j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }

    Assignment out;
    out.gt_to_pred.assign(n, -1);
    for (int j = 0; j < n; ++j)
        if (p[j] != n) out.gt_to_pred[p[j]] = j;
    for (int i = 0; i < n; ++i)
        out.total_cost += cost[static_cast<std::size_t>(i) * n + out.gt_to_pred[i]];
    return out;
}

Assignment match(const TargetSet& targets, const PredictionSet& preds,
                 const PositionLossWeights& w) {
    return hungarian(build_cost_matrix(targets, preds, w), targets.size());
}

}  // namespace trc
