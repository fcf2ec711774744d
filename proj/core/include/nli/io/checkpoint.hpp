#pragma once

#include <cstdint>
#include <filesystem>

#include "nli/model/config.hpp"
#include "nli/model/parameters.hpp"

namespace nli {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t vocab_fingerprint = 0;
  std::int64_t best_epoch = 0;
  double best_val_accuracy = 0;
  std::uint64_t seed = 0;

  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  ModelConfig config;
  ModelParameters<float> params;
  CheckpointMeta meta;
};

// Binary layout (all integers little-endian) is documented in
// docs/checkpoint_format.md. Tensor data is stored as raw IEEE-754 binary32,
// so a save/load round trip is bit-exact.
void save_checkpoint(const ModelConfig& config, const ModelParameters<float>& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

// Throws VersionError for an unsupported format version, IntegrityError
// (naming the section) for truncation, bad checksums or malformed tensors,
// and ConfigError when the stored config hash does not match the stored
// config or `expected` is given and differs.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr);

}  // namespace nli
