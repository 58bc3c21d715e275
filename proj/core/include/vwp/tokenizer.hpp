#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vwp {

/// Lowercased word/punctuation split. Bracketed tags such as "[male0]" or
/// "[sent]" survive as single tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Joins tokens with single spaces, re-attaching punctuation to the
/// preceding word.
std::string detokenize(const std::vector<std::string>& tokens);

/// True for tokens like "[sent]" and "[female3]".
bool is_bracket_tag(std::string_view token);

}  // namespace vwp
