#include "nli/text/labels.hpp"

#include <cctype>

namespace nli {

std::string_view label_name(NliLabel label) {
  switch (label) {
    case NliLabel::kEntailment:
      return "entailment";
    case NliLabel::kContradiction:
      return "contradiction";
    case NliLabel::kNeutral:
      return "neutral";
  }
  return "unknown";
}

char label_code(NliLabel label) {
  switch (label) {
    case NliLabel::kEntailment:
      return 'E';
    case NliLabel::kContradiction:
      return 'C';
    case NliLabel::kNeutral:
      return 'N';
  }
  return '?';
}

std::optional<NliLabel> parse_label(std::string_view text) {
  for (NliLabel label : kAllLabels) {
    if (text == label_name(label)) return label;
  }
  return std::nullopt;
}

std::string_view conflict_type_name(ConflictType type) {
  switch (type) {
    case ConflictType::kDeonticModality:
      return "deontic-modality";
    case ConflictType::kDeonticStructure:
      return "deontic-structure";
    case ConflictType::kDeonticObject:
      return "deontic-object";
    case ConflictType::kObjectConditional:
      return "object-conditional";
  }
  return "unknown";
}

std::optional<ConflictType> parse_conflict_type(std::string_view text) {
  std::string canonical;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (c == ' ' || c == '_' || c == '-') {
      if (!canonical.empty() && canonical.back() != '-') canonical.push_back('-');
    } else {
      canonical.push_back(static_cast<char>(std::tolower(uc)));
    }
  }
  while (!canonical.empty() && canonical.back() == '-') canonical.pop_back();
  for (ConflictType type : kAllConflictTypes) {
    if (canonical == conflict_type_name(type)) return type;
  }
  return std::nullopt;
}

}  // namespace nli
