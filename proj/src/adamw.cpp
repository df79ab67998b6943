#include "trc/adamw.hpp"

#include <cmath>
#include <stdexcept>

namespace trc {

void adamw_step(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                std::vector<double>& v, std::int64_t t, const AdamWConfig& cfg) {
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
        throw std::invalid_argument("adamw_step: buffer size mismatch");
    if (t < 1) throw std::invalid_argument("adamw_step: step index must be >= 1");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        // Decoupled decay: applied to the parameter directly, not the gradient.
        p[i] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * p[i]);
    }
}

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg) : cfg_(cfg) {
    slots_.reserve(params.size());
    for (Tensor& p : params) {
        if (!p.requires_grad()) throw std::invalid_argument("AdamW: parameter without grad");
        Slot s;
        s.param = p;
        s.m.assign(p.numel(), 0.0);
        s.v.assign(p.numel(), 0.0);
        slots_.push_back(std::move(s));
    }
}

void AdamW::step() {
    ++t_;
    for (Slot& s : slots_) {
        if (!s.param.has_grad()) continue;
        adamw_step(s.param.values(), s.param.grad(), s.m, s.v, t_, cfg_);
    }
}

void AdamW::zero_grad() {
    for (Slot& s : slots_) s.param.reset_grad();
}

}  // namespace trc
