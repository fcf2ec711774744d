#include "nli/model/config.hpp"

#include <bit>
#include <sstream>

#include "nli/errors.hpp"

namespace nli {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string("model config: ") + key + " must be positive");
  };
  positive(n_blocks, "n_blocks");
  positive(n_heads, "n_heads");
  positive(d_model, "d_model");
  positive(max_len, "max_len");
  positive(vocab_words, "vocab_words");
  positive(d_ffn, "d_ffn");
  if (n_classes < 2) throw ConfigError("model config: n_classes must be at least 2");
  if (d_model % n_heads != 0) {
    throw ConfigError("model config: d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (!(layer_norm_eps > 0)) throw ConfigError("model config: layer_norm_eps must be positive");
  if (!(init_std > 0)) throw ConfigError("model config: init_std must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("model config: dropout must lie in [0, 1)");
}

std::size_t ModelConfig::parameter_count() const {
  const std::size_t d = d_model;
  const std::size_t attention = d * 3 * d + 3 * d + d * d + d;
  const std::size_t ffn = d * d_ffn + d_ffn + d_ffn * d + d;
  const std::size_t norms = 4 * d;
  const std::size_t per_block = attention + ffn + norms;
  const std::size_t head = d * n_classes + n_classes;
  return embedding_rows() * d + n_blocks * per_block + head;
}

std::uint64_t ModelConfig::fingerprint() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(n_blocks);
  mix(n_heads);
  mix(d_model);
  mix(max_len);
  mix(vocab_words);
  mix(d_ffn);
  mix(n_classes);
  mix(std::bit_cast<std::uint64_t>(layer_norm_eps));
  mix(std::bit_cast<std::uint64_t>(init_std));
  mix(std::bit_cast<std::uint64_t>(dropout));
  return h;
}

std::string describe(const ModelConfig& c) {
  std::ostringstream os;
  os << "n_blocks=" << c.n_blocks << " n_heads=" << c.n_heads << " d_model=" << c.d_model
     << " d_ffn=" << c.d_ffn << " max_len=" << c.max_len << " vocab_words=" << c.vocab_words
     << " n_classes=" << c.n_classes;
  return os.str();
}

}  // namespace nli
