#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nli/autograd/ops.hpp"
#include "nli/autograd/tensor.hpp"
#include "nli/model/config.hpp"
#include "nli/model/parameters.hpp"
#include "nli/text/encoding.hpp"
#include "nli/text/labels.hpp"

namespace nli {

// Encoded pairs right-padded with PAD to a common length. Padding sits after
// each row's EOS, so the causal mask keeps it out of every real position.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<std::int64_t> token_ids;     // batch x seq_len
  std::vector<std::int64_t> position_ids;  // batch x seq_len, 1-based
  std::vector<std::size_t> eos_index;      // per row
  std::vector<NliLabel> labels;            // empty unless every pair is labelled

  static TokenBatch from_pairs(std::span<const EncodedPair> pairs);
  static TokenBatch from_pairs(std::span<const EncodedPair* const> pairs);
  std::size_t padding() const;
};

struct ClassProbabilities {
  std::array<double, kNumClasses> values{};

  double entailment() const { return values[0]; }
  double contradiction() const { return values[1]; }
  double neutral() const { return values[2]; }
  double operator[](NliLabel label) const { return values[static_cast<std::size_t>(label)]; }
  // First maximum in E, C, N order.
  NliLabel predicted() const;
};

// Optional stochastic behaviour during training.
struct ForwardMode {
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;

  bool active() const { return dropout > 0.0 && rng != nullptr; }
};

// Word row plus position row of the joint table, one output row per token.
template <typename Real>
Tensor<Real> embed(const TokenBatch& batch, const Tensor<Real>& table, const ModelConfig& config);

// softmax(mask(Q K^T / sqrt(d_k))) V for [T x d_k] operands, or a leading
// batch dimension of independent heads.
template <typename Real>
Tensor<Real> scaled_dot_product_attention(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v);

// x is [batch * seq_len x d_model]. When `attention` is non-null it receives
// the [batch * n_heads x T x T] attention weights.
template <typename Real>
Tensor<Real> multi_head_attention(const Tensor<Real>& x, const BlockParameters<Real>& block, std::size_t batch,
                                  std::size_t seq_len, std::size_t n_heads, Tensor<Real>* attention = nullptr);

template <typename Real>
Tensor<Real> position_wise_ffn(const Tensor<Real>& x, const BlockParameters<Real>& block);

// y = LN(x + MHA(x)); out = LN(y + FFN(y))
template <typename Real>
Tensor<Real> decoder_block(const Tensor<Real>& x, const BlockParameters<Real>& block, std::size_t batch,
                           std::size_t seq_len, const ModelConfig& config, const ForwardMode& mode = {});

// Decoder-only classifier reading its prediction off the EOS position.
template <typename Real>
class TransformerClassifier {
 public:
  TransformerClassifier(ModelConfig config, std::uint64_t seed);
  TransformerClassifier(ModelConfig config, ModelParameters<Real> parameters);

  const ModelConfig& config() const { return config_; }
  ModelParameters<Real>& parameters() { return params_; }
  const ModelParameters<Real>& parameters() const { return params_; }

  // Hidden states after each block, each [batch * seq_len x d_model].
  std::vector<Tensor<Real>> block_outputs(const TokenBatch& batch, const ForwardMode& mode = {}) const;

  // [batch x n_classes]
  Tensor<Real> logits(const TokenBatch& batch, const ForwardMode& mode = {}) const;
  Tensor<Real> probabilities(const TokenBatch& batch, const ForwardMode& mode = {}) const;

  // Inference without recording on any active tape.
  ClassProbabilities forward(const EncodedPair& pair) const;
  std::vector<ClassProbabilities> forward(std::span<const EncodedPair> pairs) const;

 private:
  void check_batch(const TokenBatch& batch) const;

  ModelConfig config_;
  ModelParameters<Real> params_;
};

extern template class TransformerClassifier<float>;
extern template class TransformerClassifier<double>;

}  // namespace nli
