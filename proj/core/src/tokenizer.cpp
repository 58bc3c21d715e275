#include "vwp/tokenizer.hpp"

#include <cctype>

namespace vwp {

namespace {

bool is_tag_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '-';
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

char lower(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 ? static_cast<char>(std::tolower(u)) : c;
}

// Length of a "[tag]" starting at pos, or 0.
std::size_t tag_length(std::string_view text, std::size_t pos) {
  if (text[pos] != '[') return 0;
  std::size_t i = pos + 1;
  while (i < text.size() && is_tag_char(text[i])) ++i;
  if (i == pos + 1 || i >= text.size() || text[i] != ']') return 0;
  return i - pos + 1;
}

}  // namespace

bool is_bracket_tag(std::string_view token) {
  return token.size() >= 3 && tag_length(token, 0) == token.size();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (is_space(c)) {
      flush();
      ++i;
    } else if (const std::size_t n = tag_length(text, i); n > 0) {
      flush();
      std::string tag;
      for (std::size_t k = i; k < i + n; ++k) tag.push_back(lower(text[k]));
      out.push_back(std::move(tag));
      i += n;
    } else if (is_ascii_punct(c)) {
      flush();
      out.emplace_back(1, c);
      ++i;
    } else {
      word.push_back(lower(c));
      ++i;
    }
  }
  flush();
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  auto attaches_left = [](const std::string& t) {
    return t == "." || t == "," || t == "!" || t == "?" || t == ";" || t == ":" || t == ")" ||
           t == "'" || t == "%";
  };
  std::string out;
  bool glue_next = false;
  for (const auto& t : tokens) {
    if (!out.empty() && !glue_next && !attaches_left(t)) out.push_back(' ');
    out += t;
    glue_next = (t == "(" || t == "'");
  }
  return out;
}

}  // namespace vwp
