#pragma once

#include <cstdint>
#include <vector>

#include "trc/tensor.hpp"

namespace trc {

// Elementwise arithmetic. Binary ops require identical shapes; scalar
// broadcast goes through the double-valued overloads (scale, add_scalar).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor abs(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // domain error on non-positive input
Tensor sigmoid(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

// Shape manipulation. All of these copy; storage is never aliased.
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor transpose(const Tensor& a);
Tensor slice_cols(const Tensor& a, int c0, int c1);
Tensor concat_cols(const std::vector<Tensor>& parts);
// Gathers rows (rank 2) or elements (rank 1); backward scatter-adds.
Tensor select_rows(const Tensor& a, const std::vector<int>& indices);

// Reductions.
Tensor sum(const Tensor& a);                 // -> [1]
Tensor sum_axis(const Tensor& a, int axis);  // rank-2 only

// Linear algebra and network primitives.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor softmax(const Tensor& x, int axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
Tensor l2_normalize_rows(const Tensor& x, double eps = 1e-12);

// Banded self-attention primitives. Row t of the score matrix covers key
// positions t-window .. t+window; slots outside [0, T) hold a large negative
// filler so a following softmax assigns them zero weight. Only valid slots
// are computed and counted as MACs.
Tensor windowed_scores(const Tensor& q, const Tensor& k, int window);
Tensor windowed_weighted_sum(const Tensor& attn, const Tensor& v, int window);
std::uint64_t windowed_valid_pairs(int t, int window);

}  // namespace trc
