#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace trc {

/// Dense double-precision tensor with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage. Values are
/// written once by the producing operation and treated as immutable
/// afterwards; only the grad buffer accumulates. Rank 1 and rank 2 shapes
/// cover everything this project needs.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const;
    int rank() const;
    int dim(int i) const;
    std::size_t numel() const;
    int rows() const;  // rank-1 tensors count as a single row
    int cols() const;

    std::vector<double>& values();
    const std::vector<double>& values() const;
    double value(std::size_t i) const;
    double value(int r, int c) const;
    double item() const;  // requires numel() == 1

    bool requires_grad() const;
    /// Grad buffer, allocated (zero-filled) on first access.
    std::vector<double>& grad();
    /// True once grad() has been touched; untouched means identically zero.
    bool has_grad() const;
    void reset_grad();

    std::uint64_t node_id() const;

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    struct Impl {
        std::vector<int> shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool requires_grad = false;
        std::uint64_t id = 0;
    };
    std::shared_ptr<Impl> impl_;
};

/// Define-by-run gradient tape. Operations append a backward closure per
/// output node; backward() replays them in reverse recording order, which is
/// a valid reverse topological order by construction. Single-threaded.
class Tape {
public:
    void record(const Tensor& out, std::function<void()> backward);
    /// Seeds d(loss)/d(loss) = 1 and runs all recorded closures in reverse.
    /// Repeated calls accumulate into the same grad buffers.
    void backward(const Tensor& loss);
    std::size_t size() const { return records_.size(); }
    void clear() { records_.clear(); }

    static Tape* active();

private:
    friend class TapeScope;
    struct Record {
        Tensor out;
        std::function<void()> fn;
    };
    std::vector<Record> records_;
};

/// RAII activation of a tape for the current thread.
class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* prev_;
};

// Multiply-accumulate instrumentation. Matrix-product-style operations bump
// this counter by their exact MAC count; elementwise work does not count.
std::uint64_t mac_count();
void reset_mac_count();
void add_macs(std::uint64_t n);

// Throws if any value is NaN or infinite.
void ensure_finite(const Tensor& t, const char* op);

}  // namespace trc
