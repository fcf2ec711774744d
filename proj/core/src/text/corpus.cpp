#include "nli/text/corpus.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "nli/errors.hpp"

namespace nli {
namespace {

constexpr std::size_t kMaxRecordedWarnings = 20;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

SnliLoadResult load_snli(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read SNLI file " + path.string());

  SnliLoadResult result;
  std::string line;
  auto warn = [&](std::size_t line_no, const std::string& why) {
    ++result.malformed;
    if (result.warnings.size() < kMaxRecordedWarnings) {
      result.warnings.push_back(path.string() + ":" + std::to_string(line_no) + ": " + why);
    }
  };
  while (std::getline(in, line)) {
    const std::size_t line_no = ++result.lines_read;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      --result.lines_read;
      continue;
    }
    nlohmann::json record = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded() || !record.is_object()) {
      warn(line_no, "not a JSON object");
      continue;
    }
    const auto s1 = record.find("sentence1");
    const auto s2 = record.find("sentence2");
    const auto gold = record.find("gold_label");
    if (s1 == record.end() || s2 == record.end() || gold == record.end() || !s1->is_string() ||
        !s2->is_string() || !gold->is_string()) {
      warn(line_no, "missing sentence1/sentence2/gold_label");
      continue;
    }
    const auto gold_text = gold->get<std::string>();
    if (gold_text == "-") {
      ++result.dropped_no_consensus;
      continue;
    }
    const auto label = parse_label(gold_text);
    if (!label) {
      warn(line_no, "unknown gold_label '" + gold_text + "'");
      continue;
    }
    result.examples.push_back({s1->get<std::string>(), s2->get<std::string>(), *label});
  }
  return result;
}

std::vector<ConflictRecord> load_norm_conflicts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read norm conflict file " + path.string());

  std::vector<ConflictRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (header_allowed && fields.size() == 3 && fields[0] == "norm_a" && fields[1] == "norm_b" &&
        fields[2] == "conflict_type") {
      header_allowed = false;
      continue;
    }
    header_allowed = false;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 3) {
      throw IngestionError(where + ": expected 3 tab-separated columns, found " + std::to_string(fields.size()));
    }
    const auto type = parse_conflict_type(fields[2]);
    if (!type) {
      throw IngestionError(where + ": unknown conflict type '" + fields[2] +
                           "' (expected deontic-modality, deontic-structure, deontic-object or object-conditional)");
    }
    records.push_back({std::move(fields[0]), std::move(fields[1]), *type});
  }
  return records;
}

}  // namespace nli
