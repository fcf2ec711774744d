#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace nli {

// Architecture hyperparameters. Defaults are the full-size classifier:
// 12 blocks x 12 heads over 240-dim states, a joint embedding table with
// 56,220 word rows followed by 360 position rows.
struct ModelConfig {
  std::size_t n_blocks = 12;
  std::size_t n_heads = 12;
  std::size_t d_model = 240;
  std::size_t max_len = 360;
  std::size_t vocab_words = 56220;  // includes the reserved PAD/UNK/EOS rows
  std::size_t d_ffn = 960;
  std::size_t n_classes = 3;
  double layer_norm_eps = 1e-5;
  double init_std = 0.02;
  double dropout = 0.0;

  // Throws ConfigError on zero sizes, d_model not divisible by n_heads, or a
  // dropout rate outside [0, 1).
  void validate() const;

  std::size_t head_width() const { return d_model / n_heads; }
  std::size_t embedding_rows() const { return vocab_words + max_len; }

  // Closed-form number of learnable scalars.
  std::size_t parameter_count() const;

  // Stable hash of every field; checkpoints reject a mismatch.
  std::uint64_t fingerprint() const;

  bool operator==(const ModelConfig&) const = default;
};

std::string describe(const ModelConfig& config);

}  // namespace nli
