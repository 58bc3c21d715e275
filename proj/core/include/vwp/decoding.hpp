#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vwp/model.hpp"
#include "vwp/rng.hpp"
#include "vwp/vocab.hpp"

namespace vwp {

enum class DecodingMode { kGreedy, kNucleus };
const char* to_string(DecodingMode mode);
DecodingMode parse_decoding_mode(const std::string& s);

struct DecodingConfig {
  DecodingMode mode = DecodingMode::kGreedy;
  double p = 0.1;
  std::size_t max_new_tokens = 200;
  std::uint64_t seed = 0;
  TokenId stop_token = special::kEos;

  void validate() const;
};

/// Tokens of the nucleus (smallest descending-probability prefix whose mass
/// reaches p) with renormalised probabilities. Sorting ties go to the lower id.
std::vector<std::pair<TokenId, double>> nucleus_support(std::span<const double> dist, double p);

/// Draws one token from the nucleus. Throws kNumeric when dist is not a
/// probability vector (negative entries or mass off 1 by more than 1e-9).
TokenId nucleus_sample(std::span<const double> dist, double p, Rng& rng);

/// Index of the largest entry, lowest index on ties.
TokenId argmax(std::span<const double> values);

/// Autoregressive continuation after the conditioning prefix and [BOS].
/// The stop token is not included in the result.
std::vector<TokenId> generate(const StoryGenModel& model, const Conditioning& cond,
                              const DecodingConfig& config);

/// Names used to fill placeholders at display time.
struct NamePools {
  std::vector<std::string> male;
  std::vector<std::string> female;
  std::vector<std::string> locations;
};

/// Replaces placeholders with sampled names (one name per placeholder, no
/// name reused within a pool), renders [sent] as a paragraph break, drops
/// other special tokens and re-attaches punctuation.
std::string realize(const std::vector<std::string>& tokens, const NamePools& names, Rng& rng);

}  // namespace vwp
