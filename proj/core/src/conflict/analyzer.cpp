#include "nli/conflict/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "nli/errors.hpp"

namespace nli {
namespace {

std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// Tabs and newlines would break the TSV layout.
std::string sanitize(const std::string& text) {
  std::string out = text;
  std::replace(out.begin(), out.end(), '\t', ' ');
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

std::string shorten(const std::string& text, std::size_t width) {
  if (text.size() <= width) return text;
  return text.substr(0, width - 3) + "...";
}

}  // namespace

bool PairAnalysis::entailment_despite_object_conflict() const {
  const bool object_level = record.conflict_type == ConflictType::kDeonticObject ||
                            record.conflict_type == ConflictType::kObjectConditional;
  return object_level &&
         (forward.predicted == NliLabel::kEntailment || reverse.predicted == NliLabel::kEntailment);
}

double PairAnalysis::asymmetry() const {
  double worst = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    worst = std::max(worst, std::abs(forward.probs.values[c] - reverse.probs.values[c]));
  }
  return worst;
}

DirectionalScore score_pair(std::string_view premise, std::string_view hypothesis,
                            const TransformerClassifier<float>& model, const Vocabulary& vocab) {
  if (premise.empty() || hypothesis.empty()) throw ContractViolation("score_pair: empty norm text");
  const EncodedPair pair = encode_pair(premise, hypothesis, vocab, model.config().max_len);
  DirectionalScore score;
  score.probs = model.forward(pair);
  score.predicted = score.probs.predicted();
  score.truncated = pair.truncated;
  return score;
}

PairAnalysis bidirectional(const ConflictRecord& record, const TransformerClassifier<float>& model,
                           const Vocabulary& vocab) {
  PairAnalysis analysis;
  analysis.record = record;
  analysis.forward = score_pair(record.norm_a, record.norm_b, model, vocab);
  analysis.reverse = score_pair(record.norm_b, record.norm_a, model, vocab);
  analysis.reverse.premise = NormId::kB;
  analysis.reverse.hypothesis = NormId::kA;
  return analysis;
}

ConflictReport conflict_report(std::span<const ConflictRecord> records, const TransformerClassifier<float>& model,
                               const Vocabulary& vocab) {
  ConflictReport report;
  report.pairs.reserve(records.size());
  for (const auto& r : records) report.pairs.push_back(bidirectional(r, model, vocab));

  for (ConflictType type : kAllConflictTypes) {
    TypeSummary summary;
    summary.conflict_type = type;
    for (const auto& p : report.pairs) {
      if (p.record.conflict_type != type) continue;
      ++summary.count;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        summary.mean_forward[c] += p.forward.probs.values[c];
        summary.mean_reverse[c] += p.reverse.probs.values[c];
      }
      ++summary.histogram_forward[static_cast<std::size_t>(p.forward.predicted)];
      ++summary.histogram_reverse[static_cast<std::size_t>(p.reverse.predicted)];
    }
    if (summary.count == 0) continue;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      summary.mean_forward[c] /= static_cast<double>(summary.count);
      summary.mean_reverse[c] /= static_cast<double>(summary.count);
    }
    report.summaries.push_back(summary);
  }
  return report;
}

void write_report_tsv(const ConflictReport& report, std::ostream& out) {
  out << "type\tnorm_a\tnorm_b\tE_ab\tC_ab\tN_ab\tE_ba\tC_ba\tN_ba\tpred_ab\tpred_ba\ttrunc_ab\ttrunc_ba\tobject_flag\n";
  for (const auto& p : report.pairs) {
    out << conflict_type_name(p.record.conflict_type) << '\t' << sanitize(p.record.norm_a) << '\t'
        << sanitize(p.record.norm_b);
    for (double v : p.forward.probs.values) out << '\t' << fixed(v, 9);
    for (double v : p.reverse.probs.values) out << '\t' << fixed(v, 9);
    out << '\t' << label_code(p.forward.predicted) << '\t' << label_code(p.reverse.predicted) << '\t'
        << (p.forward.truncated ? 1 : 0) << '\t' << (p.reverse.truncated ? 1 : 0) << '\t'
        << (p.entailment_despite_object_conflict() ? 1 : 0) << '\n';
  }
}

void write_report_text(const ConflictReport& report, std::ostream& out) {
  constexpr std::size_t kNormWidth = 48;
  out << std::left << std::setw(20) << "type" << std::setw(kNormWidth + 2) << "norm (a) / norm (b)"
      << "  E(a,b)  C(a,b)  N(a,b)  E(b,a)  C(b,a)  N(b,a)  pred\n";
  for (const auto& p : report.pairs) {
    out << std::left << std::setw(20) << conflict_type_name(p.record.conflict_type) << "(a) "
        << std::setw(kNormWidth - 2) << shorten(sanitize(p.record.norm_a), kNormWidth - 2);
    out << std::right;
    for (double v : p.forward.probs.values) out << std::setw(8) << fixed(v, 2);
    for (double v : p.reverse.probs.values) out << std::setw(8) << fixed(v, 2);
    out << "  " << label_code(p.forward.predicted) << '/' << label_code(p.reverse.predicted);
    if (p.forward.truncated || p.reverse.truncated) out << " [truncated]";
    if (p.entailment_despite_object_conflict()) out << " [E despite object conflict]";
    out << '\n'
        << std::left << std::setw(20) << "" << "(b) " << shorten(sanitize(p.record.norm_b), kNormWidth - 2)
        << '\n';
  }
  out << '\n' << "per-type summary (mean scores; predicted-class counts E/C/N)\n";
  for (const auto& s : report.summaries) {
    out << std::left << std::setw(20) << conflict_type_name(s.conflict_type) << "n=" << std::setw(5) << s.count
        << std::right << " (a,b):";
    for (double v : s.mean_forward) out << ' ' << fixed(v, 3);
    out << "  [" << s.histogram_forward[0] << '/' << s.histogram_forward[1] << '/' << s.histogram_forward[2]
        << "]  (b,a):";
    for (double v : s.mean_reverse) out << ' ' << fixed(v, 3);
    out << "  [" << s.histogram_reverse[0] << '/' << s.histogram_reverse[1] << '/' << s.histogram_reverse[2]
        << "]\n";
  }
}

}  // namespace nli
