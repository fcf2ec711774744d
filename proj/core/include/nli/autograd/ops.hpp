#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

#include "nli/autograd/tensor.hpp"

namespace nli {

// Strict upper triangle (j > i) of the trailing two dimensions is masked.
struct CausalMask {
  static constexpr bool masked(std::size_t row, std::size_t col) { return col > row; }
};

// Value written into masked attention scores: the most negative finite
// number of the active precision rather than -inf, so that max-subtraction
// inside softmax never evaluates inf - inf.
template <typename Real>
constexpr Real masked_score() {
  return std::numeric_limits<Real>::lowest();
}

// Inverted dropout: zeroes each element with probability `rate` and scales
// survivors by 1 / (1 - rate).
template <typename Real>
Tensor<Real> dropout(const Tensor<Real>& x, Real rate, std::mt19937_64& rng);

// [m x k] * [k x n] -> [m x n]
template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b);

// Batched product over a leading dimension: [B x m x k] * [B x k x n].
// With transpose_b the right operand is read as [B x n x k]. Rank-2 operands
// are treated as a batch of one.
template <typename Real>
Tensor<Real> batched_matmul(const Tensor<Real>& a, const Tensor<Real>& b, bool transpose_b = false);

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);

// x + bias broadcast over the last dimension.
template <typename Real>
Tensor<Real> add_bias(const Tensor<Real>& x, const Tensor<Real>& bias);

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& x, Real factor);

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& x);

// Max-stabilised softmax along `axis`.
template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& x, std::size_t axis);

// Tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <typename Real>
Tensor<Real> gelu(const Tensor<Real>& x);

// Normalises over the last dimension (population variance), then applies
// gain and bias.
template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& bias,
                        Real eps);

// Square trailing [T x T] (optionally with a leading batch dimension).
template <typename Real>
Tensor<Real> masked_fill(const Tensor<Real>& scores, CausalMask mask);

// Row lookup: out[i] = table[indices[i]]. Gradients scatter-add into table.
template <typename Real>
Tensor<Real> gather_rows(const Tensor<Real>& table, std::span<const std::int64_t> indices);

// [B*T x C] -> [B*heads x T x width] taking columns [offset, offset + heads*width).
template <typename Real>
Tensor<Real> split_heads(const Tensor<Real>& x, std::size_t batch, std::size_t seq_len,
                         std::size_t heads, std::size_t offset, std::size_t width);

// Inverse of split_heads over a full-width input: [B*heads x T x width] -> [B*T x heads*width].
template <typename Real>
Tensor<Real> merge_heads(const Tensor<Real>& x, std::size_t batch, std::size_t heads);

}  // namespace nli
