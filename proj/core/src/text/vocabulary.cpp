#include "nli/text/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "nli/errors.hpp"
#include "nli/text/corpus.hpp"
#include "nli/text/tokenizer.hpp"

namespace nli {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> words) {
  tokens_.reserve(words.size() + kNumReserved);
  tokens_.emplace_back(kPadToken);
  tokens_.emplace_back(kUnkToken);
  tokens_.emplace_back(kEosToken);
  for (auto& w : words) tokens_.push_back(std::move(w));
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw IngestionError("vocabulary contains an empty token at index " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<std::int64_t>(i)).second) {
      throw IngestionError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

std::int64_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

const std::string& Vocabulary::token_at(std::int64_t index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw ContractViolation("vocabulary index " + std::to_string(index) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(index)];
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= '\n';
    h *= 1099511628211ull;
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write vocabulary to " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IngestionError("failed writing vocabulary to " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  const std::string_view reserved[] = {kPadToken, kUnkToken, kEosToken};
  if (lines.size() < kNumReserved) throw IngestionError(path.string() + ": vocabulary is missing reserved tokens");
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (lines[i] != reserved[i]) {
      throw IngestionError(path.string() + ":" + std::to_string(i + 1) + ": expected reserved token " +
                           std::string(reserved[i]) + ", found '" + lines[i] + "'");
    }
  }
  return Vocabulary(std::vector<std::string>(lines.begin() + kNumReserved, lines.end()));
}

Vocabulary build_vocab(std::span<const NliExample> corpus, std::size_t min_count) {
  if (corpus.empty()) throw IngestionError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : corpus) {
    for (auto& t : tokenize(ex.premise)) ++counts[std::move(t)];
    for (auto& t : tokenize(ex.hypothesis)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : counts) {
    if (n >= min_count) ranked.emplace_back(token, n);
  }
  // counts is ordered lexicographically already; a stable sort keeps that as tie-break.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [token, n] : ranked) words.push_back(std::move(token));
  return Vocabulary(std::move(words));
}

}  // namespace nli
