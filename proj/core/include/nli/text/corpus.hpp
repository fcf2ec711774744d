#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "nli/text/labels.hpp"

namespace nli {

struct NliExample {
  std::string premise;
  std::string hypothesis;
  NliLabel gold_label = NliLabel::kNeutral;
};

struct SnliLoadResult {
  std::vector<NliExample> examples;
  std::size_t lines_read = 0;
  std::size_t dropped_no_consensus = 0;  // gold_label "-"
  std::size_t malformed = 0;
  std::vector<std::string> warnings;  // first few malformed lines, with line numbers
};

// Reads the JSON-lines distribution of SNLI (fields sentence1, sentence2,
// gold_label). Rows without annotator consensus are dropped; malformed lines
// are skipped and counted. Throws IngestionError when the file cannot be read.
SnliLoadResult load_snli(const std::filesystem::path& path);

struct ConflictRecord {
  std::string norm_a;
  std::string norm_b;
  ConflictType conflict_type = ConflictType::kDeonticModality;
};

// Tab-separated file with columns norm_a, norm_b, conflict_type. A header
// row naming those columns is optional; '#' lines and blank lines are
// ignored. Throws IngestionError (with file:line) on an unknown conflict type
// or a row with the wrong number of columns.
std::vector<ConflictRecord> load_norm_conflicts(const std::filesystem::path& path);

}  // namespace nli
