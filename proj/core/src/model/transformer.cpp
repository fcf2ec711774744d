#include "nli/model/transformer.hpp"

#include <algorithm>
#include <cmath>

#include "nli/errors.hpp"
#include "nli/text/vocabulary.hpp"

namespace nli {

namespace {

template <typename PairRange>
TokenBatch build_batch(const PairRange& pairs) {
  TokenBatch out;
  out.batch = pairs.size();
  if (out.batch == 0) throw ContractViolation("TokenBatch: no pairs");
  bool all_labelled = true;
  for (const EncodedPair& p : pairs) {
    if (p.token_ids.empty()) throw ContractViolation("TokenBatch: empty pair");
    out.seq_len = std::max(out.seq_len, p.length());
    all_labelled = all_labelled && p.label.has_value();
  }
  out.token_ids.assign(out.batch * out.seq_len, Vocabulary::kPad);
  out.position_ids.resize(out.batch * out.seq_len);
  out.eos_index.reserve(out.batch);
  std::size_t row = 0;
  for (const EncodedPair& p : pairs) {
    std::copy(p.token_ids.begin(), p.token_ids.end(), out.token_ids.begin() + row * out.seq_len);
    for (std::size_t t = 0; t < out.seq_len; ++t) {
      out.position_ids[row * out.seq_len + t] = t < p.length() ? p.position_ids[t] : static_cast<std::int64_t>(t + 1);
    }
    out.eos_index.push_back(p.length() - 1);
    if (all_labelled) out.labels.push_back(*p.label);
    ++row;
  }
  return out;
}

struct Deref {
  std::span<const EncodedPair* const> items;
  std::size_t size() const { return items.size(); }
  struct Iter {
    const EncodedPair* const* p;
    const EncodedPair& operator*() const { return **p; }
    Iter& operator++() {
      ++p;
      return *this;
    }
    bool operator!=(const Iter& o) const { return p != o.p; }
  };
  Iter begin() const { return {items.data()}; }
  Iter end() const { return {items.data() + items.size()}; }
};

template <typename Real>
Tensor<Real> maybe_dropout(const Tensor<Real>& x, const ForwardMode& mode) {
  if (!mode.active()) return x;
  return dropout(x, static_cast<Real>(mode.dropout), *mode.rng);
}

}  // namespace

TokenBatch TokenBatch::from_pairs(std::span<const EncodedPair> pairs) { return build_batch(pairs); }

TokenBatch TokenBatch::from_pairs(std::span<const EncodedPair* const> pairs) { return build_batch(Deref{pairs}); }

std::size_t TokenBatch::padding() const {
  std::size_t pad = 0;
  for (std::size_t e : eos_index) pad += seq_len - (e + 1);
  return pad;
}

NliLabel ClassProbabilities::predicted() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<NliLabel>(best);
}

template <typename Real>
Tensor<Real> embed(const TokenBatch& batch, const Tensor<Real>& table, const ModelConfig& config) {
  if (table.rank() != 2 || table.dim(0) != config.embedding_rows() || table.dim(1) != config.d_model) {
    throw DimensionError("embed: table " + shape_string(table.shape()) + " does not match config");
  }
  const auto words = static_cast<std::int64_t>(config.vocab_words);
  const auto max_len = static_cast<std::int64_t>(config.max_len);
  std::vector<std::int64_t> position_rows(batch.position_ids.size());
  for (std::size_t i = 0; i < batch.token_ids.size(); ++i) {
    const std::int64_t tok = batch.token_ids[i];
    const std::int64_t pos = batch.position_ids[i];
    if (tok < 0 || tok >= words) {
      throw ContractViolation("embed: token id " + std::to_string(tok) + " outside " + std::to_string(words) +
                              " word rows");
    }
    if (pos < 1 || pos > max_len) {
      throw ContractViolation("embed: position " + std::to_string(pos) + " outside 1.." + std::to_string(max_len));
    }
    position_rows[i] = words + pos - 1;
  }
  return add(gather_rows(table, std::span<const std::int64_t>(batch.token_ids)),
             gather_rows(table, std::span<const std::int64_t>(position_rows)));
}

template <typename Real>
Tensor<Real> scaled_dot_product_attention(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || (q.rank() != 2 && q.rank() != 3)) {
    throw DimensionError("scaled_dot_product_attention: Q " + shape_string(q.shape()) + ", K " +
                         shape_string(k.shape()) + ", V " + shape_string(v.shape()));
  }
  const Real inv_sqrt_dk = Real(1) / std::sqrt(static_cast<Real>(q.shape().back()));
  const Tensor<Real> scores = scale(batched_matmul(q, k, /*transpose_b=*/true), inv_sqrt_dk);
  const Tensor<Real> weights = softmax(masked_fill(scores, CausalMask{}), q.rank() - 1);
  return batched_matmul(weights, v);
}

template <typename Real>
Tensor<Real> multi_head_attention(const Tensor<Real>& x, const BlockParameters<Real>& block, std::size_t batch,
                                  std::size_t seq_len, std::size_t n_heads, Tensor<Real>* attention) {
  const std::size_t d_model = x.dim(1);
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("multi_head_attention: d_model " + std::to_string(d_model) + " not divisible by " +
                      std::to_string(n_heads) + " heads");
  }
  const std::size_t width = d_model / n_heads;
  const Tensor<Real> qkv = add_bias(matmul(x, block.qkv_weight), block.qkv_bias);
  const Tensor<Real> q = split_heads(qkv, batch, seq_len, n_heads, 0, width);
  const Tensor<Real> k = split_heads(qkv, batch, seq_len, n_heads, d_model, width);
  const Tensor<Real> v = split_heads(qkv, batch, seq_len, n_heads, 2 * d_model, width);

  const Real inv_sqrt_dk = Real(1) / std::sqrt(static_cast<Real>(width));
  const Tensor<Real> scores = scale(batched_matmul(q, k, /*transpose_b=*/true), inv_sqrt_dk);
  const Tensor<Real> weights = softmax(masked_fill(scores, CausalMask{}), 2);
  if (attention != nullptr) *attention = weights;
  const Tensor<Real> context = merge_heads(batched_matmul(weights, v), batch, n_heads);
  return add_bias(matmul(context, block.out_weight), block.out_bias);
}

template <typename Real>
Tensor<Real> position_wise_ffn(const Tensor<Real>& x, const BlockParameters<Real>& block) {
  const Tensor<Real> hidden = gelu(add_bias(matmul(x, block.ffn_in_weight), block.ffn_in_bias));
  return add_bias(matmul(hidden, block.ffn_out_weight), block.ffn_out_bias);
}

template <typename Real>
Tensor<Real> decoder_block(const Tensor<Real>& x, const BlockParameters<Real>& block, std::size_t batch,
                           std::size_t seq_len, const ModelConfig& config, const ForwardMode& mode) {
  const auto eps = static_cast<Real>(config.layer_norm_eps);
  const Tensor<Real> attended = maybe_dropout(multi_head_attention(x, block, batch, seq_len, config.n_heads), mode);
  const Tensor<Real> y = layer_norm(add(x, attended), block.ln1_gain, block.ln1_bias, eps);
  const Tensor<Real> transformed = maybe_dropout(position_wise_ffn(y, block), mode);
  return layer_norm(add(y, transformed), block.ln2_gain, block.ln2_bias, eps);
}

template <typename Real>
TransformerClassifier<Real>::TransformerClassifier(ModelConfig config, std::uint64_t seed)
    : config_(config), params_(ModelParameters<Real>::initialize(config, seed)) {}

template <typename Real>
TransformerClassifier<Real>::TransformerClassifier(ModelConfig config, ModelParameters<Real> parameters)
    : config_(config), params_(std::move(parameters)) {
  config_.validate();
  params_.check_shapes(config_);
}

template <typename Real>
void TransformerClassifier<Real>::check_batch(const TokenBatch& batch) const {
  if (batch.batch == 0 || batch.seq_len == 0 || batch.token_ids.size() != batch.batch * batch.seq_len ||
      batch.position_ids.size() != batch.token_ids.size() || batch.eos_index.size() != batch.batch) {
    throw ContractViolation("malformed token batch");
  }
  if (batch.seq_len > config_.max_len) {
    throw ContractViolation("sequence of " + std::to_string(batch.seq_len) + " tokens exceeds max_len " +
                            std::to_string(config_.max_len));
  }
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const std::size_t e = batch.eos_index[b];
    if (e >= batch.seq_len || batch.token_ids[b * batch.seq_len + e] != Vocabulary::kEos) {
      throw ContractViolation("pair " + std::to_string(b) + " is not terminated by EOS");
    }
  }
}

template <typename Real>
std::vector<Tensor<Real>> TransformerClassifier<Real>::block_outputs(const TokenBatch& batch,
                                                                    const ForwardMode& mode) const {
  check_batch(batch);
  std::vector<Tensor<Real>> outputs;
  outputs.reserve(config_.n_blocks);
  Tensor<Real> x = maybe_dropout(embed(batch, params_.embedding, config_), mode);
  for (const auto& block : params_.blocks) {
    x = decoder_block(x, block, batch.batch, batch.seq_len, config_, mode);
    outputs.push_back(x);
  }
  return outputs;
}

template <typename Real>
Tensor<Real> TransformerClassifier<Real>::logits(const TokenBatch& batch, const ForwardMode& mode) const {
  auto outputs = block_outputs(batch, mode);
  std::vector<std::int64_t> eos_rows(batch.batch);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    eos_rows[b] = static_cast<std::int64_t>(b * batch.seq_len + batch.eos_index[b]);
  }
  const Tensor<Real> summary = gather_rows(outputs.back(), std::span<const std::int64_t>(eos_rows));
  return add_bias(matmul(summary, params_.cls_weight), params_.cls_bias);
}

template <typename Real>
Tensor<Real> TransformerClassifier<Real>::probabilities(const TokenBatch& batch, const ForwardMode& mode) const {
  return softmax(logits(batch, mode), 1);
}

template <typename Real>
std::vector<ClassProbabilities> TransformerClassifier<Real>::forward(std::span<const EncodedPair> pairs) const {
  NoGradScope<Real> no_grad;
  const Tensor<Real> probs = probabilities(TokenBatch::from_pairs(pairs));
  std::vector<ClassProbabilities> out(pairs.size());
  const std::size_t c = config_.n_classes;
  for (std::size_t b = 0; b < pairs.size(); ++b) {
    for (std::size_t j = 0; j < kNumClasses && j < c; ++j) out[b].values[j] = static_cast<double>(probs[b * c + j]);
  }
  return out;
}

template <typename Real>
ClassProbabilities TransformerClassifier<Real>::forward(const EncodedPair& pair) const {
  return forward(std::span<const EncodedPair>(&pair, 1)).front();
}

#define NLI_INSTANTIATE_MODEL(Real)                                                                            \
  template Tensor<Real> embed(const TokenBatch&, const Tensor<Real>&, const ModelConfig&);                     \
  template Tensor<Real> scaled_dot_product_attention(const Tensor<Real>&, const Tensor<Real>&,                 \
                                                     const Tensor<Real>&);                                     \
  template Tensor<Real> multi_head_attention(const Tensor<Real>&, const BlockParameters<Real>&, std::size_t,   \
                                             std::size_t, std::size_t, Tensor<Real>*);                         \
  template Tensor<Real> position_wise_ffn(const Tensor<Real>&, const BlockParameters<Real>&);                  \
  template Tensor<Real> decoder_block(const Tensor<Real>&, const BlockParameters<Real>&, std::size_t,          \
                                      std::size_t, const ModelConfig&, const ForwardMode&);                    \
  template class TransformerClassifier<Real>;

NLI_INSTANTIATE_MODEL(float)
NLI_INSTANTIATE_MODEL(double)

#undef NLI_INSTANTIATE_MODEL

}  // namespace nli
