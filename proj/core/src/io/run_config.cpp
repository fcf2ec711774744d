#include "nli/io/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "nli/errors.hpp"

namespace nli {
namespace {

enum class Kind { kUnsigned, kReal, kText };

struct Field {
  std::string key;
  Kind kind;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

[[noreturn]] void type_error(const std::string& key, const char* expected, const std::string& raw) {
  throw ConfigError("config key '" + key + "' expects " + expected + ", got '" + raw + "'");
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& raw) {
  std::uint64_t v = 0;
  const auto* end = raw.data() + raw.size();
  auto [ptr, ec] = std::from_chars(raw.data(), end, v);
  if (raw.empty() || ec != std::errc() || ptr != end) type_error(key, "an unsigned integer", raw);
  return v;
}

double parse_real(const std::string& key, const std::string& raw) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(raw, &used);
  } catch (const std::exception&) {
    type_error(key, "a real number", raw);
  }
  if (used != raw.size()) type_error(key, "a real number", raw);
  return v;
}

std::string parse_text(const std::string& key, const std::string& raw) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) ++i;
      out.push_back(raw[i]);
    }
    return out;
  }
  if (!raw.empty() && raw.front() == '"') type_error(key, "a string", raw);
  return raw;
}

#define NLI_UNSIGNED(name, member)                                                                          \
  Field{name, Kind::kUnsigned,                                                                              \
        [](RunConfig& c, const std::string& raw) { c.member = static_cast<decltype(c.member)>(parse_unsigned(name, raw)); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }}
#define NLI_REAL(name, member)                                                                              \
  Field{name, Kind::kReal, [](RunConfig& c, const std::string& raw) { c.member = parse_real(name, raw); },  \
        [](const RunConfig& c) { return format_real(c.member); }}
#define NLI_TEXT(name, member)                                                                              \
  Field{name, Kind::kText, [](RunConfig& c, const std::string& raw) { c.member = parse_text(name, raw); },  \
        [](const RunConfig& c) { return quote(c.member); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      NLI_UNSIGNED("n_blocks", model.n_blocks),
      NLI_UNSIGNED("n_heads", model.n_heads),
      NLI_UNSIGNED("d_model", model.d_model),
      NLI_UNSIGNED("max_len", model.max_len),
      NLI_UNSIGNED("vocab_words", model.vocab_words),
      NLI_UNSIGNED("d_ffn", model.d_ffn),
      NLI_UNSIGNED("n_classes", model.n_classes),
      NLI_REAL("layer_norm_eps", model.layer_norm_eps),
      NLI_REAL("init_std", model.init_std),
      NLI_REAL("dropout", model.dropout),
      NLI_REAL("base_lr", train.base_lr),
      NLI_REAL("warmup_fraction", train.warmup_fraction),
      NLI_REAL("clip_bound", train.clip_bound),
      NLI_UNSIGNED("batch_size", train.batch_size),
      NLI_UNSIGNED("patience_epochs", train.patience_epochs),
      NLI_UNSIGNED("max_epochs", train.max_epochs),
      NLI_UNSIGNED("seed", train.seed),
      NLI_REAL("adam_beta1", train.adam_beta1),
      NLI_REAL("adam_beta2", train.adam_beta2),
      NLI_REAL("adam_eps", train.adam_eps),
      NLI_UNSIGNED("min_count", min_count),
      NLI_UNSIGNED("train_limit", train_limit),
      NLI_UNSIGNED("val_limit", val_limit),
      NLI_TEXT("snli_train", snli_train),
      NLI_TEXT("snli_dev", snli_dev),
      NLI_TEXT("snli_test", snli_test),
      NLI_TEXT("output_dir", output_dir),
  };
  return table;
}

#undef NLI_UNSIGNED
#undef NLI_REAL
#undef NLI_TEXT

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Drops a trailing '#' comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

RunConfig parse_config(std::string_view text, std::string_view source, std::vector<std::string>* defaulted) {
  std::map<std::string, const Field*> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;

  RunConfig config;
  std::map<std::string, std::size_t> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(strip_comment(line));
    if (content.empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string raw = trim(std::string_view(content).substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ConfigError(where + ": unknown config key '" + key + "'");
    if (auto [prev, fresh] = seen.emplace(key, line_no); !fresh) {
      throw ConfigError(where + ": config key '" + key + "' repeats line " + std::to_string(prev->second));
    }
    try {
      it->second->set(config, raw);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (defaulted != nullptr) {
    defaulted->clear();
    for (const auto& f : fields()) {
      if (!seen.count(f.key)) defaulted->push_back(f.key);
    }
  }
  config.model.validate();
  config.train.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path, std::vector<std::string>* defaulted) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), defaulted);
}

std::string serialize(const RunConfig& config) {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.key << " = " << f.get(config) << '\n';
  return out.str();
}

void validate_training_inputs(const RunConfig& config) {
  auto check = [](const std::string& key, const std::string& value, bool required) {
    if (value.empty()) {
      if (required) throw ConfigError("missing required config key '" + key + "'");
      return;
    }
    std::ifstream probe(value);
    if (!probe) throw ConfigError("config key '" + key + "' names unreadable path '" + value + "'");
  };
  check("snli_train", config.snli_train, true);
  check("snli_dev", config.snli_dev, true);
  check("snli_test", config.snli_test, false);
}

}  // namespace nli
