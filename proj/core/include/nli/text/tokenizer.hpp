#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nli {

// Lowercases ASCII letters, splits on whitespace and emits every ASCII
// punctuation character as its own token. Bytes outside ASCII (UTF-8
// sequences) stay attached to the surrounding word.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace nli
