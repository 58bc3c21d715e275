#include "vwp/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "vwp/errors.hpp"

namespace vwp {

const std::array<std::string, special::kCount>& special_tokens() {
  static const std::array<std::string, special::kCount> kTokens = {
      "[PAD]",   "[BOS]",   "[EOS]",   "[UNK]",     "[sent]",    "[location]",
      "[male0]", "[male1]", "[male2]", "[male3]",   "[male4]",   "[female0]",
      "[female1]", "[female2]", "[female3]", "[female4]"};
  return kTokens;
}

Vocabulary::Vocabulary() {
  for (const auto& t : special_tokens()) append(t);
}

void Vocabulary::append(const std::string& token) {
  if (ids_.count(token)) fail(ErrorKind::kData, "duplicate vocabulary token '" + token + "'");
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus,
                             std::size_t min_freq) {
  std::map<std::string, std::size_t> counts;
  for (const auto& stream : corpus) {
    for (const auto& t : stream) ++counts[t];
  }
  Vocabulary v;
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= std::max<std::size_t>(min_freq, 1) && !v.contains(tok)) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [tok, _] : kept) v.append(tok);
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  const auto& sp = special_tokens();
  if (tokens.size() < sp.size() || !std::equal(sp.begin(), sp.end(), tokens.begin())) {
    fail(ErrorKind::kData, "vocabulary does not start with the special tokens");
  }
  Vocabulary v;
  for (std::size_t i = sp.size(); i < tokens.size(); ++i) v.append(tokens[i]);
  return v;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.count(std::string(token)) != 0;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? special::kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    fail(ErrorKind::kIndex, "token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kData, "cannot write vocabulary to " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kData, "cannot read vocabulary from " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(tokens);
}

}  // namespace vwp
