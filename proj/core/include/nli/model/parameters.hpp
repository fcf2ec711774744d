#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nli/autograd/tensor.hpp"
#include "nli/model/config.hpp"

namespace nli {

template <typename Real>
struct BlockParameters {
  // Single projection to [Q | K | V]; within each third, head h owns columns
  // [h * head_width, (h + 1) * head_width).
  Tensor<Real> qkv_weight;  // d_model x 3 d_model
  Tensor<Real> qkv_bias;    // 3 d_model
  Tensor<Real> out_weight;  // d_model x d_model
  Tensor<Real> out_bias;
  Tensor<Real> ln1_gain;
  Tensor<Real> ln1_bias;
  Tensor<Real> ffn_in_weight;  // d_model x d_ffn
  Tensor<Real> ffn_in_bias;
  Tensor<Real> ffn_out_weight;  // d_ffn x d_model
  Tensor<Real> ffn_out_bias;
  Tensor<Real> ln2_gain;
  Tensor<Real> ln2_bias;
};

template <typename Real>
struct ModelParameters {
  // Word rows [0, vocab_words) followed by position rows; position p (1-based)
  // lives at row vocab_words + p - 1.
  Tensor<Real> embedding;
  std::vector<BlockParameters<Real>> blocks;
  Tensor<Real> cls_weight;  // d_model x n_classes
  Tensor<Real> cls_bias;

  // N(0, init_std) for projections and embeddings, zero biases, unit gains.
  static ModelParameters initialize(const ModelConfig& config, std::uint64_t seed);
  // Every tensor zero except layer-norm gains, which are one.
  static ModelParameters zeros(const ModelConfig& config);

  // Stable order used by the optimiser and the checkpoint format.
  std::vector<std::pair<std::string, Tensor<Real>>> named_tensors() const;
  std::vector<Tensor<Real>> tensors() const;

  // Sum of tensor sizes.
  std::size_t enumerated_count() const;

  // Throws ConfigError naming the first tensor whose shape disagrees with `config`.
  void check_shapes(const ModelConfig& config) const;

  ModelParameters clone() const;
  // Copies values (not handles) from `other`; shapes must match.
  void assign(const ModelParameters& other);
};

// Expected shape of every named tensor for `config`, in named_tensors() order.
std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& config);

extern template struct ModelParameters<float>;
extern template struct ModelParameters<double>;

}  // namespace nli
