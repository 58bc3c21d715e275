#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vwp {

using TokenId = std::int64_t;

// Fixed ids of the special tokens. They occupy the lowest ids in this order.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kSent = 4;
inline constexpr TokenId kLocation = 5;
inline constexpr TokenId kMale0 = 6;
inline constexpr TokenId kFemale0 = 11;
inline constexpr int kSlotsPerGender = 5;
inline constexpr std::size_t kCount = 16;
}  // namespace special

/// Names of the special tokens, index == id.
const std::array<std::string, special::kCount>& special_tokens();

/// Bijection between surface tokens and ids. Unknown surfaces map to [UNK].
class Vocabulary {
 public:
  /// Specials-only vocabulary.
  Vocabulary();

  /// Tokens with frequency >= min_freq, ordered by descending count then
  /// lexicographically, after the specials.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                          std::size_t min_freq);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(std::string_view token) const;
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<TokenId>& ids) const;

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// One token per line, line number == id.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  void append(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace vwp
