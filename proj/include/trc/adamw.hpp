#pragma once

#include <cstdint>
#include <vector>

#include "trc/tensor.hpp"

namespace trc {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// One decoupled-weight-decay Adam update. t is the 1-based step index used
// for bias correction; m and v are the running moment buffers.
void adamw_step(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                std::vector<double>& v, std::int64_t t, const AdamWConfig& cfg);

// Optimizer over a fixed parameter list. Parameters whose grad buffer was
// never touched in the current backward pass are skipped entirely (no moment
// update, no decay), mirroring how a missing gradient is conventionally
// treated.
class AdamW {
public:
    AdamW(std::vector<Tensor> params, AdamWConfig cfg);

    void step();
    void zero_grad();
    std::int64_t steps_taken() const { return t_; }

private:
    struct Slot {
        Tensor param;
        std::vector<double> m;
        std::vector<double> v;
    };
    std::vector<Slot> slots_;
    AdamWConfig cfg_;
    std::int64_t t_ = 0;
};

}  // namespace trc
