#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nli/text/labels.hpp"
#include "nli/text/vocabulary.hpp"

namespace nli {

inline constexpr std::size_t kDefaultMaxLength = 360;

// Premise tokens directly followed by hypothesis tokens and a terminal EOS,
// with 1-based positional indexes. No separator between the two sentences.
struct EncodedPair {
  std::vector<std::int64_t> token_ids;
  std::vector<std::int64_t> position_ids;  // 1..T
  std::optional<NliLabel> label;
  std::size_t premise_len = 0;
  bool truncated = false;

  std::size_t length() const { return token_ids.size(); }
  std::size_t hypothesis_len() const { return token_ids.size() - 1 - premise_len; }
};

// Over-length input keeps the premise and EOS and drops the hypothesis tail
// (then the premise tail, if the premise alone does not fit). `truncated`
// reports whether anything was dropped.
EncodedPair encode_pair(std::string_view premise, std::string_view hypothesis, const Vocabulary& vocab,
                        std::size_t max_len = kDefaultMaxLength);

std::vector<std::string> decode(const std::vector<std::int64_t>& ids, const Vocabulary& vocab);

struct NliExample;
std::vector<EncodedPair> encode_examples(const std::vector<NliExample>& examples, const Vocabulary& vocab,
                                         std::size_t max_len = kDefaultMaxLength);

}  // namespace nli
