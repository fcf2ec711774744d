#include "nli/text/encoding.hpp"

#include "nli/errors.hpp"
#include "nli/text/corpus.hpp"
#include "nli/text/tokenizer.hpp"

namespace nli {

EncodedPair encode_pair(std::string_view premise, std::string_view hypothesis, const Vocabulary& vocab,
                        std::size_t max_len) {
  if (max_len < 1) throw ContractViolation("encode_pair: max_len must leave room for EOS");
  auto premise_tokens = tokenize(premise);
  auto hypothesis_tokens = tokenize(hypothesis);
  const std::size_t budget = max_len - 1;

  EncodedPair pair;
  if (premise_tokens.size() + hypothesis_tokens.size() > budget) {
    pair.truncated = true;
    if (premise_tokens.size() >= budget) {
      premise_tokens.resize(budget);
      hypothesis_tokens.clear();
    } else {
      hypothesis_tokens.resize(budget - premise_tokens.size());
    }
  }
  pair.premise_len = premise_tokens.size();
  pair.token_ids.reserve(premise_tokens.size() + hypothesis_tokens.size() + 1);
  for (const auto& t : premise_tokens) pair.token_ids.push_back(vocab.index_of(t));
  for (const auto& t : hypothesis_tokens) pair.token_ids.push_back(vocab.index_of(t));
  pair.token_ids.push_back(Vocabulary::kEos);
  pair.position_ids.resize(pair.token_ids.size());
  for (std::size_t i = 0; i < pair.position_ids.size(); ++i) pair.position_ids[i] = static_cast<std::int64_t>(i + 1);
  return pair;
}

std::vector<std::string> decode(const std::vector<std::int64_t>& ids, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (auto id : ids) tokens.push_back(vocab.token_at(id));
  return tokens;
}

std::vector<EncodedPair> encode_examples(const std::vector<NliExample>& examples, const Vocabulary& vocab,
                                         std::size_t max_len) {
  std::vector<EncodedPair> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back(encode_pair(ex.premise, ex.hypothesis, vocab, max_len));
    out.back().label = ex.gold_label;
  }
  return out;
}

}  // namespace nli
