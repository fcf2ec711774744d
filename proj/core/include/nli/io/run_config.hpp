#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nli/model/config.hpp"
#include "nli/train/train_config.hpp"

namespace nli {

// Everything a run needs. The file form is flat `key = value` text, one key
// per line, '#' starts a comment; every key has a fixed type (unsigned
// integer, real or string) and unknown keys are rejected.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string snli_train;
  std::string snli_dev;
  std::string snli_test;
  std::string output_dir = "nli_output";
  std::size_t min_count = 1;
  std::size_t train_limit = 0;  // 0 = use every example
  std::size_t val_limit = 0;

  bool operator==(const RunConfig&) const = default;
};

// Names of every accepted key, in serialisation order.
const std::vector<std::string>& config_keys();

// `defaulted`, when given, receives the keys that were absent and took their default.
RunConfig parse_config(std::string_view text, std::string_view source = "<config>",
                       std::vector<std::string>* defaulted = nullptr);
RunConfig load_config(const std::filesystem::path& path, std::vector<std::string>* defaulted = nullptr);

// Every key with its current value; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& config);

// Throws ConfigError naming the first missing required key or unreadable
// path among snli_train and snli_dev (and snli_test when non-empty).
void validate_training_inputs(const RunConfig& config);

}  // namespace nli
