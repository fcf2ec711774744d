#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nli {

struct NliExample;

// Bidirectional token <-> index map. The three reserved tokens always occupy
// indices 0..2 in the order PAD, UNK, EOS.
class Vocabulary {
 public:
  static constexpr std::int64_t kPad = 0;
  static constexpr std::int64_t kUnk = 1;
  static constexpr std::int64_t kEos = 2;
  static constexpr std::size_t kNumReserved = 3;
  static constexpr std::string_view kPadToken = "[PAD]";
  static constexpr std::string_view kUnkToken = "[UNK]";
  static constexpr std::string_view kEosToken = "[EOS]";

  Vocabulary();
  // `words` excludes the reserved tokens; duplicates are rejected.
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return tokens_.size(); }
  std::size_t word_count() const { return tokens_.size() - kNumReserved; }

  // UNK for anything not in the map.
  std::int64_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token_at(std::int64_t index) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // FNV-1a over the token list; stored in checkpoints to pair them with a vocabulary.
  std::uint64_t fingerprint() const;

  // One token per line, reserved tokens first.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int64_t> index_;
};

// Counts tokens across premises and hypotheses and keeps those seen at least
// `min_count` times, ordered by descending frequency then lexicographically.
// Throws IngestionError on an empty corpus.
Vocabulary build_vocab(std::span<const NliExample> corpus, std::size_t min_count = 1);

}  // namespace nli
