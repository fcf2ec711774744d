#include "nli/train/train_config.hpp"

#include "nli/errors.hpp"

namespace nli {

void TrainConfig::validate() const {
  if (!(base_lr >= 0)) throw ConfigError("train config: base_lr must be non-negative");
  if (!(warmup_fraction > 0 && warmup_fraction < 1)) throw ConfigError("train config: warmup_fraction must lie in (0, 1)");
  if (!(clip_bound > 0)) throw ConfigError("train config: clip_bound must be positive");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be at least 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw ConfigError("train config: adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw ConfigError("train config: adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("train config: adam_eps must be positive");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, const char* tag) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char* p = tag; *p != '\0'; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  return splitmix64(master ^ h);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) { return splitmix64(master ^ splitmix64(index)); }

}  // namespace nli
