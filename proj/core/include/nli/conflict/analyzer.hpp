#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "nli/model/transformer.hpp"
#include "nli/text/corpus.hpp"
#include "nli/text/vocabulary.hpp"

namespace nli {

enum class NormId : int { kA = 0, kB = 1 };

struct DirectionalScore {
  NormId premise = NormId::kA;
  NormId hypothesis = NormId::kB;
  ClassProbabilities probs;
  NliLabel predicted = NliLabel::kEntailment;
  bool truncated = false;
};

struct PairAnalysis {
  ConflictRecord record;
  DirectionalScore forward;  // (a, b)
  DirectionalScore reverse;  // (b, a)

  // Object-level conflicts that the model nevertheless reads as entailment in
  // at least one direction.
  bool entailment_despite_object_conflict() const;
  // Largest absolute difference between the two directions' class scores.
  double asymmetry() const;
};

struct TypeSummary {
  ConflictType conflict_type = ConflictType::kDeonticModality;
  std::size_t count = 0;
  std::array<double, kNumClasses> mean_forward{};
  std::array<double, kNumClasses> mean_reverse{};
  std::array<std::size_t, kNumClasses> histogram_forward{};
  std::array<std::size_t, kNumClasses> histogram_reverse{};
};

struct ConflictReport {
  std::vector<PairAnalysis> pairs;      // input order
  std::vector<TypeSummary> summaries;  // fixed type order, only types present
};

DirectionalScore score_pair(std::string_view premise, std::string_view hypothesis,
                            const TransformerClassifier<float>& model, const Vocabulary& vocab);

// Runs the model twice, once per premise/hypothesis assignment.
PairAnalysis bidirectional(const ConflictRecord& record, const TransformerClassifier<float>& model,
                           const Vocabulary& vocab);

ConflictReport conflict_report(std::span<const ConflictRecord> records, const TransformerClassifier<float>& model,
                               const Vocabulary& vocab);

// Tab-separated table; columns: type, norm_a, norm_b, E_ab, C_ab, N_ab, E_ba,
// C_ba, N_ba, pred_ab, pred_ba, trunc_ab, trunc_ba, object_flag.
void write_report_tsv(const ConflictReport& report, std::ostream& out);

// Aligned human-readable rendering with per-type aggregates.
void write_report_text(const ConflictReport& report, std::ostream& out);

}  // namespace nli
