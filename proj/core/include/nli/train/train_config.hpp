#pragma once

#include <cstddef>
#include <cstdint>

namespace nli {

struct TrainConfig {
  double base_lr = 6.25e-5;
  double warmup_fraction = 0.002;
  double clip_bound = 1.0;
  std::size_t batch_size = 16;
  std::size_t patience_epochs = 10;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 42;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Throws ConfigError when a field is outside its domain.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

// SplitMix64 finaliser applied to master ^ FNV-1a(tag). Components draw their
// seeds from the master seed through this function: "init" for weights,
// "batching" for batch order, "dropout" for dropout masks.
std::uint64_t derive_seed(std::uint64_t master, const char* tag);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace nli
