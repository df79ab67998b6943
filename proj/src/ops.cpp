#include "trc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace trc {

namespace {

constexpr double kMaskFill = -1e30;

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(), std::string(op) + ": shape mismatch");
}

bool taped(const Tensor& out) {
    return out.requires_grad() && Tape::active() != nullptr;
}

void record(const Tensor& out, std::function<void()> fn) {
    Tape::active()->record(out, std::move(fn));
}

// Accumulating matmul kernels; C is never cleared here. Each kernel bumps
// the MAC counter by exactly M*K*N, so backward passes are counted too.
// Forward-only measurements bracket the forward call with reset/read.

// C[M x N] += A[M x K] * B[K x N]
void mm_nn(const double* A, const double* B, double* C, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const double* a_row = A + static_cast<std::size_t>(i) * K;
        double* c_row = C + static_cast<std::size_t>(i) * N;
        for (int k = 0; k < K; ++k) {
            const double aik = a_row[k];
            const double* b_row = B + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c_row[j] += aik * b_row[j];
        }
    }
    add_macs(static_cast<std::uint64_t>(M) * K * N);
}

// C[M x N] += A[M x K] * B[N x K]^T
void mm_nt(const double* A, const double* B, double* C, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const double* a_row = A + static_cast<std::size_t>(i) * K;
        double* c_row = C + static_cast<std::size_t>(i) * N;
        for (int j = 0; j < N; ++j) {
            const double* b_row = B + static_cast<std::size_t>(j) * K;
            double acc = 0.0;
            for (int k = 0; k < K; ++k) acc += a_row[k] * b_row[k];
            c_row[j] += acc;
        }
    }
    add_macs(static_cast<std::uint64_t>(M) * K * N);
}

// C[M x N] += A[K x M]^T * B[K x N]
void mm_tn(const double* A, const double* B, double* C, int M, int K, int N) {
    for (int k = 0; k < K; ++k) {
        const double* a_row = A + static_cast<std::size_t>(k) * M;
        const double* b_row = B + static_cast<std::size_t>(k) * N;
        for (int i = 0; i < M; ++i) {
            const double aki = a_row[i];
            double* c_row = C + static_cast<std::size_t>(i) * N;
            for (int j = 0; j < N; ++j) c_row[j] += aki * b_row[j];
        }
    }
    add_macs(static_cast<std::uint64_t>(M) * K * N);
}

// Shared body for elementwise unary ops: dfn(x, y) returns dy/dx.
template <typename Fwd, typename Dfn>
Tensor unary_op(const char* name, const Tensor& a, Fwd fwd, Dfn dfn, bool check_finite) {
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
    auto& ov = out.values();
    const auto& av = a.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = fwd(av[i]);
    if (check_finite) ensure_finite(out, name);
    if (taped(out)) {
        record(out, [a = a, out, dfn]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            const auto& av = a.values();
            const auto& ov = out.values();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += dfn(av[i], ov[i]) * g[i];
        });
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto& ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.value(i) + b.value(i);
    if (taped(out)) {
        record(out, [a = a, b = b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto& ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.value(i) - b.value(i);
    if (taped(out)) {
        record(out, [a = a, b = b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto& ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.value(i) * b.value(i);
    if (taped(out)) {
        record(out, [a = a, b = b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += b.value(i) * g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += a.value(i) * g[i];
            }
        });
    }
    return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_shape("div", a, b);
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto& ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.value(i) / b.value(i);
    ensure_finite(out, "div");
    if (taped(out)) {
        record(out, [a = a, b = b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / b.value(i);
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double bi = b.value(i);
                    gb[i] -= g[i] * a.value(i) / (bi * bi);
                }
            }
        });
    }
    return out;
}

Tensor maximum(const Tensor& a, const Tensor& b) {
    require_same_shape("maximum", a, b);
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto& ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::max(a.value(i), b.value(i));
    if (taped(out)) {
        // Ties route the full gradient to the first operand.
        record(out, [a = a, b = b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a.value(i) >= b.value(i)) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a.value(i) < b.value(i)) gb[i] += g[i];
            }
        });
    }
    return out;
}

Tensor minimum(const Tensor& a, const Tensor& b) {
    require_same_shape("minimum", a, b);
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
    auto& ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::min(a.value(i), b.value(i));
    if (taped(out)) {
        record(out, [a = a, b = b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a.value(i) <= b.value(i)) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a.value(i) > b.value(i)) gb[i] += g[i];
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double s) {
    return unary_op(
        "scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; }, false);
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary_op(
        "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; },
        false);
}

Tensor abs(const Tensor& a) {
    return unary_op(
        "abs", a, [](double x) { return std::abs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }, false);
}

Tensor relu(const Tensor& a) {
    return unary_op(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; }, false);
}

Tensor gelu(const Tensor& a) {
    // Exact erf form; derivative is Phi(x) + x * phi(x).
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    constexpr double kInvSqrt2Pi = 0.3989422804014326779;
    return unary_op(
        "gelu", a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
        [](double x, double) {
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
        },
        false);
}

Tensor exp(const Tensor& a) {
    return unary_op(
        "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; }, true);
}

Tensor log(const Tensor& a) {
    for (double v : a.values())
        if (!(v > 0.0)) throw std::runtime_error("log: non-positive input " + std::to_string(v));
    return unary_op(
        "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; },
        false);
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        "sigmoid", a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); }, false);
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    require(lo <= hi, "clamp: lo > hi");
    // Gradient passes through the closed interval (subgradient 1 at the edges).
    return unary_op(
        "clamp", a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; }, false);
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
    Tensor out = Tensor::from(std::move(shape), a.values(), a.requires_grad());
    require(out.numel() == a.numel(), "reshape: element count mismatch");
    if (taped(out)) {
        record(out, [a = a, out]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    require(a.rank() == 2, "transpose: rank-2 tensor required");
    const int m = a.rows(), n = a.cols();
    Tensor out = Tensor::zeros({n, m}, a.requires_grad());
    auto& ov = out.values();
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) ov[static_cast<std::size_t>(c) * m + r] = a.value(r, c);
    if (taped(out)) {
        record(out, [a = a, out, m, n]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < n; ++c)
                    ga[static_cast<std::size_t>(r) * n + c] += g[static_cast<std::size_t>(c) * m + r];
        });
    }
    return out;
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
    require(a.rank() == 2, "slice_cols: rank-2 tensor required");
    require(0 <= c0 && c0 < c1 && c1 <= a.cols(), "slice_cols: bad column range");
    const int m = a.rows(), n = a.cols(), w = c1 - c0;
    Tensor out = Tensor::zeros({m, w}, a.requires_grad());
    auto& ov = out.values();
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < w; ++c) ov[static_cast<std::size_t>(r) * w + c] = a.value(r, c0 + c);
    if (taped(out)) {
        record(out, [a = a, out, m, n, w, c0]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < w; ++c)
                    ga[static_cast<std::size_t>(r) * n + c0 + c] += g[static_cast<std::size_t>(r) * w + c];
        });
    }
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    const int m = parts.front().rows();
    int total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        require(p.rank() == 2 && p.rows() == m, "concat_cols: row count mismatch");
        total += p.cols();
        rg = rg || p.requires_grad();
    }
    Tensor out = Tensor::zeros({m, total}, rg);
    auto& ov = out.values();
    int off = 0;
    for (const Tensor& p : parts) {
        const int w = p.cols();
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < w; ++c)
                ov[static_cast<std::size_t>(r) * total + off + c] = p.value(r, c);
        off += w;
    }
    if (taped(out)) {
        record(out, [parts = parts, out, m, total]() mutable {
            const auto& g = out.grad();
            int off = 0;
            for (Tensor& p : parts) {
                const int w = p.cols();
                if (p.requires_grad()) {
                    auto& gp = p.grad();
                    for (int r = 0; r < m; ++r)
                        for (int c = 0; c < w; ++c)
                            gp[static_cast<std::size_t>(r) * w + c] +=
                                g[static_cast<std::size_t>(r) * total + off + c];
                }
                off += w;
            }
        });
    }
    return out;
}

Tensor select_rows(const Tensor& a, const std::vector<int>& indices) {
    require(!indices.empty(), "select_rows: empty index list");
    const int m = a.rank() == 2 ? a.rows() : a.dim(0);  // rank 1: element count
    for (int i : indices) require(0 <= i && i < m, "select_rows: index out of range");
    const int k = static_cast<int>(indices.size());
    const int n = a.rank() == 2 ? a.cols() : 1;
    Tensor out = a.rank() == 2 ? Tensor::zeros({k, n}, a.requires_grad())
                               : Tensor::zeros({k}, a.requires_grad());
    auto& ov = out.values();
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < n; ++c)
            ov[static_cast<std::size_t>(r) * n + c] = a.value(static_cast<std::size_t>(indices[r]) * n + c);
    if (taped(out)) {
        // Duplicate indices scatter-add, so repeated selection stays correct.
        record(out, [a = a, out, indices = indices, n]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (std::size_t r = 0; r < indices.size(); ++r)
                for (int c = 0; c < n; ++c)
                    ga[static_cast<std::size_t>(indices[r]) * n + c] += g[r * n + c];
        });
    }
    return out;
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    Tensor out = Tensor::from({1}, {acc}, a.requires_grad());
    if (taped(out)) {
        record(out, [a = a, out]() mutable {
            const double g = out.grad()[0];
            auto& ga = a.grad();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
        });
    }
    return out;
}

Tensor sum_axis(const Tensor& a, int axis) {
    require(a.rank() == 2, "sum_axis: rank-2 tensor required");
    require(axis == 0 || axis == 1, "sum_axis: axis must be 0 or 1");
    const int m = a.rows(), n = a.cols();
    Tensor out = Tensor::zeros({axis == 0 ? n : m}, a.requires_grad());
    auto& ov = out.values();
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) ov[axis == 0 ? c : r] += a.value(r, c);
    if (taped(out)) {
        record(out, [a = a, out, m, n, axis]() mutable {
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < n; ++c)
                    ga[static_cast<std::size_t>(r) * n + c] += g[axis == 0 ? c : r];
        });
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 tensors required");
    require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
    const int M = a.rows(), K = a.cols(), N = b.cols();
    Tensor out = Tensor::zeros({M, N}, a.requires_grad() || b.requires_grad());
    mm_nn(a.values().data(), b.values().data(), out.values().data(), M, K, N);
    ensure_finite(out, "matmul");
    if (taped(out)) {
        record(out, [a = a, b = b, out, M, K, N]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad())
                mm_nt(g, b.values().data(), a.grad().data(), M, N, K);  // dA += G B^T
            if (b.requires_grad())
                mm_tn(a.values().data(), g, b.grad().data(), K, M, N);  // dB += A^T G
        });
    }
    return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    require(x.rank() == 2 && bias.rank() == 1, "add_bias: need rank-2 input, rank-1 bias");
    require(x.cols() == bias.dim(0), "add_bias: width mismatch");
    const int m = x.rows(), n = x.cols();
    Tensor out = Tensor::zeros({m, n}, x.requires_grad() || bias.requires_grad());
    auto& ov = out.values();
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c)
            ov[static_cast<std::size_t>(r) * n + c] = x.value(r, c) + bias.value(c);
    if (taped(out)) {
        record(out, [x = x, bias = bias, out, m, n]() mutable {
            const auto& g = out.grad();
            if (x.requires_grad()) {
                auto& gx = x.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
            }
            if (bias.requires_grad()) {
                auto& gb = bias.grad();
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < n; ++c) gb[c] += g[static_cast<std::size_t>(r) * n + c];
            }
        });
    }
    return out;
}

Tensor softmax(const Tensor& x, int axis) {
    require(x.rank() == 2 || (x.rank() == 1 && axis == 0), "softmax: bad rank/axis");
    require(axis == 0 || axis == 1, "softmax: axis must be 0 or 1");
    // Treat a vector as one row; "lanes" run along the reduced axis.
    const bool vec = x.rank() == 1;
    const int m = vec ? 1 : x.rows();
    const int n = vec ? x.dim(0) : x.cols();
    const int lanes = (vec || axis == 1) ? m : n;      // independent softmaxes
    const int width = (vec || axis == 1) ? n : m;      // elements per softmax
    // Value captures: this lambda outlives the function inside the backward
    // closure below.
    const auto at = [vec, axis, n](int lane, int k) -> std::size_t {
        if (vec || axis == 1) return static_cast<std::size_t>(lane) * n + k;
        return static_cast<std::size_t>(k) * n + lane;
    };
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    auto& ov = out.values();
    const auto& xv = x.values();
    for (int l = 0; l < lanes; ++l) {
        double mx = xv[at(l, 0)];
        for (int k = 1; k < width; ++k) mx = std::max(mx, xv[at(l, k)]);
        double s = 0.0;
        for (int k = 0; k < width; ++k) {
            const double e = std::exp(xv[at(l, k)] - mx);
            ov[at(l, k)] = e;
            s += e;
        }
        for (int k = 0; k < width; ++k) ov[at(l, k)] /= s;
    }
    ensure_finite(out, "softmax");
    if (taped(out)) {
        record(out, [x = x, out, lanes, width, at]() mutable {
            const auto& g = out.grad();
            const auto& y = out.values();
            auto& gx = x.grad();
            for (int l = 0; l < lanes; ++l) {
                double dot = 0.0;
                for (int k = 0; k < width; ++k) dot += g[at(l, k)] * y[at(l, k)];
                for (int k = 0; k < width; ++k)
                    gx[at(l, k)] += y[at(l, k)] * (g[at(l, k)] - dot);
            }
        });
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require(x.rank() == 2, "layer_norm: rank-2 input required");
    require(gain.rank() == 1 && bias.rank() == 1, "layer_norm: rank-1 gain/bias required");
    require(gain.dim(0) == x.cols() && bias.dim(0) == x.cols(), "layer_norm: width mismatch");
    require(eps > 0.0, "layer_norm: eps must be positive");
    const int m = x.rows(), n = x.cols();
    Tensor out = Tensor::zeros({m, n}, x.requires_grad() || gain.requires_grad() || bias.requires_grad());
    std::vector<double> xhat(static_cast<std::size_t>(m) * n);
    std::vector<double> inv_sigma(m);
    auto& ov = out.values();
    for (int r = 0; r < m; ++r) {
        double mu = 0.0;
        for (int c = 0; c < n; ++c) mu += x.value(r, c);
        mu /= n;
        double var = 0.0;
        for (int c = 0; c < n; ++c) {
            const double d = x.value(r, c) - mu;
            var += d * d;
        }
        var /= n;  // biased estimate
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_sigma[r] = inv;
        for (int c = 0; c < n; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * n + c;
            xhat[idx] = (x.value(r, c) - mu) * inv;
            ov[idx] = gain.value(c) * xhat[idx] + bias.value(c);
        }
    }
    ensure_finite(out, "layer_norm");
    if (taped(out)) {
        record(out, [x = x, gain = gain, bias = bias, out, m, n, xhat = std::move(xhat),
                     inv_sigma = std::move(inv_sigma)]() mutable {
            const auto& g = out.grad();
            for (int r = 0; r < m; ++r) {
                // dx = inv * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
                double m1 = 0.0, m2 = 0.0;
                for (int c = 0; c < n; ++c) {
                    const std::size_t idx = static_cast<std::size_t>(r) * n + c;
                    const double dxh = g[idx] * gain.value(c);
                    m1 += dxh;
                    m2 += dxh * xhat[idx];
                }
                m1 /= n;
                m2 /= n;
                if (x.requires_grad()) {
                    auto& gx = x.grad();
                    for (int c = 0; c < n; ++c) {
                        const std::size_t idx = static_cast<std::size_t>(r) * n + c;
                        const double dxh = g[idx] * gain.value(c);
                        gx[idx] += inv_sigma[r] * (dxh - m1 - xhat[idx] * m2);
                    }
                }
            }
            if (gain.requires_grad()) {
                auto& gg = gain.grad();
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < n; ++c) {
                        const std::size_t idx = static_cast<std::size_t>(r) * n + c;
                        gg[c] += g[idx] * xhat[idx];
                    }
            }
            if (bias.requires_grad()) {
                auto& gb = bias.grad();
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < n; ++c) gb[c] += g[static_cast<std::size_t>(r) * n + c];
            }
        });
    }
    return out;
}

Tensor l2_normalize_rows(const Tensor& x, double eps) {
    require(x.rank() == 2, "l2_normalize_rows: rank-2 input required");
    require(eps > 0.0, "l2_normalize_rows: eps must be positive");
    const int m = x.rows(), n = x.cols();
    Tensor out = Tensor::zeros({m, n}, x.requires_grad());
    std::vector<double> norm(m);
    auto& ov = out.values();
    for (int r = 0; r < m; ++r) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += x.value(r, c) * x.value(r, c);
        norm[r] = std::sqrt(s + eps);  // eps inside the root keeps d/dx finite at 0
        for (int c = 0; c < n; ++c)
            ov[static_cast<std::size_t>(r) * n + c] = x.value(r, c) / norm[r];
    }
    ensure_finite(out, "l2_normalize_rows");
    if (taped(out)) {
        record(out, [x = x, out, m, n, norm = std::move(norm)]() mutable {
            const auto& g = out.grad();
            const auto& y = out.values();
            auto& gx = x.grad();
            for (int r = 0; r < m; ++r) {
                double dot = 0.0;
                for (int c = 0; c < n; ++c) {
                    const std::size_t idx = static_cast<std::size_t>(r) * n + c;
                    dot += g[idx] * y[idx];
                }
                for (int c = 0; c < n; ++c) {
                    const std::size_t idx = static_cast<std::size_t>(r) * n + c;
                    gx[idx] += (g[idx] - dot * y[idx]) / norm[r];
                }
            }
        });
    }
    return out;
}

std::uint64_t windowed_valid_pairs(int t, int window) {
    std::uint64_t total = 0;
    for (int i = 0; i < t; ++i) {
        const int lo = std::max(i - window, 0);
        const int hi = std::min(i + window, t - 1);
        total += static_cast<std::uint64_t>(hi - lo + 1);
    }
    return total;
}

Tensor windowed_scores(const Tensor& q, const Tensor& k, int window) {
    require(q.rank() == 2 && k.rank() == 2, "windowed_scores: rank-2 tensors required");
    require(q.shape() == k.shape(), "windowed_scores: shape mismatch");
    require(window >= 0, "windowed_scores: negative window");
    const int T = q.rows(), C = q.cols(), S = 2 * window + 1;
    Tensor out = Tensor::full({T, S}, kMaskFill, q.requires_grad() || k.requires_grad());
    auto& ov = out.values();
    std::uint64_t macs = 0;
    for (int t = 0; t < T; ++t) {
        for (int w = 0; w < S; ++w) {
            const int j = t - window + w;
            if (j < 0 || j >= T) continue;
            double acc = 0.0;
            for (int c = 0; c < C; ++c) acc += q.value(t, c) * k.value(j, c);
            ov[static_cast<std::size_t>(t) * S + w] = acc;
            macs += C;
        }
    }
    add_macs(macs);
    ensure_finite(out, "windowed_scores");
    if (taped(out)) {
        record(out, [q = q, k = k, out, T, C, S, window]() mutable {
            const auto& g = out.grad();
            std::uint64_t macs = 0;
            for (int t = 0; t < T; ++t) {
                for (int w = 0; w < S; ++w) {
                    const int j = t - window + w;
                    if (j < 0 || j >= T) continue;
                    const double gv = g[static_cast<std::size_t>(t) * S + w];
                    if (q.requires_grad()) {
                        auto& gq = q.grad();
                        for (int c = 0; c < C; ++c)
                            gq[static_cast<std::size_t>(t) * C + c] += gv * k.value(j, c);
                        macs += C;
                    }
                    if (k.requires_grad()) {
                        auto& gk = k.grad();
                        for (int c = 0; c < C; ++c)
                            gk[static_cast<std::size_t>(j) * C + c] += gv * q.value(t, c);
                        macs += C;
                    }
                }
            }
            add_macs(macs);
        });
    }
    return out;
}

Tensor windowed_weighted_sum(const Tensor& attn, const Tensor& v, int window) {
    require(attn.rank() == 2 && v.rank() == 2, "windowed_weighted_sum: rank-2 tensors required");
    require(window >= 0, "windowed_weighted_sum: negative window");
    require(attn.cols() == 2 * window + 1, "windowed_weighted_sum: window/width mismatch");
    require(attn.rows() == v.rows(), "windowed_weighted_sum: row count mismatch");
    const int T = v.rows(), C = v.cols(), S = attn.cols();
    Tensor out = Tensor::zeros({T, C}, attn.requires_grad() || v.requires_grad());
    auto& ov = out.values();
    std::uint64_t macs = 0;
    for (int t = 0; t < T; ++t) {
        for (int w = 0; w < S; ++w) {
            const int j = t - window + w;
            if (j < 0 || j >= T) continue;
            const double a = attn.value(t, w);
            for (int c = 0; c < C; ++c)
                ov[static_cast<std::size_t>(t) * C + c] += a * v.value(j, c);
            macs += C;
        }
    }
    add_macs(macs);
    ensure_finite(out, "windowed_weighted_sum");
    if (taped(out)) {
        record(out, [attn = attn, v = v, out, T, C, S, window]() mutable {
            const auto& g = out.grad();
            std::uint64_t macs = 0;
            for (int t = 0; t < T; ++t) {
                for (int w = 0; w < S; ++w) {
                    const int j = t - window + w;
                    if (j < 0 || j >= T) continue;
                    if (attn.requires_grad()) {
                        auto& ga = attn.grad();
                        double acc = 0.0;
                        for (int c = 0; c < C; ++c)
                            acc += g[static_cast<std::size_t>(t) * C + c] * v.value(j, c);
                        ga[static_cast<std::size_t>(t) * S + w] += acc;
                        macs += C;
                    }
                    if (v.requires_grad()) {
                        auto& gv = v.grad();
                        const double a = attn.value(t, w);
                        for (int c = 0; c < C; ++c)
                            gv[static_cast<std::size_t>(j) * C + c] +=
                                a * g[static_cast<std::size_t>(t) * C + c];
                        macs += C;
                    }
                }
            }
            add_macs(macs);
        });
    }
    return out;
}

}  // namespace trc
