#include "trc/tensor.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace trc {

namespace {

std::atomic<std::uint64_t> g_next_id{1};
thread_local Tape* g_active_tape = nullptr;
thread_local std::uint64_t g_mac_count = 0;

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    if (shape.empty() || shape.size() > 2) {
        throw std::invalid_argument("Tensor: only rank-1 and rank-2 shapes are supported");
    }
    return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->values.assign(n, 0.0);
    t.impl_->requires_grad = requires_grad;
    t.impl_->id = g_next_id.fetch_add(1);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& v : t.impl_->values) v = value;
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    if (values.size() != n) throw std::invalid_argument("Tensor::from: value count does not match shape");
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->values = std::move(values);
    t.impl_->requires_grad = requires_grad;
    t.impl_->id = g_next_id.fetch_add(1);
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

const std::vector<int>& Tensor::shape() const { return impl_->shape; }
int Tensor::rank() const { return static_cast<int>(impl_->shape.size()); }

int Tensor::dim(int i) const {
    if (i < 0 || i >= rank()) throw std::invalid_argument("Tensor::dim: axis out of range");
    return impl_->shape[static_cast<std::size_t>(i)];
}

std::size_t Tensor::numel() const { return impl_->values.size(); }

int Tensor::rows() const { return rank() == 2 ? impl_->shape[0] : 1; }
int Tensor::cols() const { return rank() == 2 ? impl_->shape[1] : impl_->shape[0]; }

std::vector<double>& Tensor::values() { return impl_->values; }
const std::vector<double>& Tensor::values() const { return impl_->values; }

double Tensor::value(std::size_t i) const { return impl_->values[i]; }

double Tensor::value(int r, int c) const {
    return impl_->values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
                         static_cast<std::size_t>(c)];
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item: tensor is not scalar");
    return impl_->values[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

std::vector<double>& Tensor::grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
    return impl_->grad;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

void Tensor::reset_grad() {
    if (impl_) impl_->grad.clear();
}

std::uint64_t Tensor::node_id() const { return impl_ ? impl_->id : 0; }

void Tape::record(const Tensor& out, std::function<void()> backward) {
    records_.push_back(Record{out, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw std::invalid_argument("Tape::backward: loss must be a defined scalar");
    }
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        // Untouched grad buffer means the node does not feed the loss.
        if (it->out.has_grad()) it->fn();
    }
}

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : prev_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

std::uint64_t mac_count() { return g_mac_count; }
void reset_mac_count() { g_mac_count = 0; }
void add_macs(std::uint64_t n) { g_mac_count += n; }

void ensure_finite(const Tensor& t, const char* op) {
    for (double v : t.values()) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string(op) + ": non-finite value in result");
        }
    }
}

}  // namespace trc
