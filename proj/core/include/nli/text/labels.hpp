#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace nli {

// Class index order is also the argmax tie-break precedence.
enum class NliLabel : int { kEntailment = 0, kContradiction = 1, kNeutral = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<NliLabel, kNumClasses> kAllLabels = {NliLabel::kEntailment, NliLabel::kContradiction,
                                                                  NliLabel::kNeutral};

std::string_view label_name(NliLabel label);
// Single-letter code used in report columns (E, C, N).
char label_code(NliLabel label);
std::optional<NliLabel> parse_label(std::string_view text);

enum class ConflictType : int { kDeonticModality = 0, kDeonticStructure = 1, kDeonticObject = 2, kObjectConditional = 3 };

inline constexpr std::array<ConflictType, 4> kAllConflictTypes = {
    ConflictType::kDeonticModality, ConflictType::kDeonticStructure, ConflictType::kDeonticObject,
    ConflictType::kObjectConditional};

std::string_view conflict_type_name(ConflictType type);
// Accepts "deontic-modality", "deontic modality", "Deontic_Modality", ...
std::optional<ConflictType> parse_conflict_type(std::string_view text);

}  // namespace nli
