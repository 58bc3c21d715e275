#include "vwp/decoding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "vwp/errors.hpp"
#include "vwp/kernels.hpp"
#include "vwp/tokenizer.hpp"

namespace vwp {

const char* to_string(DecodingMode mode) {
  return mode == DecodingMode::kGreedy ? "greedy" : "nucleus";
}

DecodingMode parse_decoding_mode(const std::string& s) {
  if (s == "greedy") return DecodingMode::kGreedy;
  if (s == "nucleus") return DecodingMode::kNucleus;
  fail(ErrorKind::kConfig, "unknown decoding mode '" + s + "' (greedy|nucleus)");
}

void DecodingConfig::validate() const {
  if (!(p > 0.0 && p <= 1.0)) fail(ErrorKind::kConfig, "nucleus p must lie in (0, 1]");
}

namespace {

void check_distribution(std::span<const double> dist) {
  if (dist.empty()) fail(ErrorKind::kNumeric, "empty distribution");
  double sum = 0.0;
  for (double v : dist) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::kNumeric, "invalid probability entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::kNumeric, "distribution does not sum to 1");
}

}  // namespace

std::vector<std::pair<TokenId, double>> nucleus_support(std::span<const double> dist, double p) {
  check_distribution(dist);
  if (!(p > 0.0 && p <= 1.0)) fail(ErrorKind::kConfig, "nucleus p must lie in (0, 1]");
  std::vector<TokenId> order(dist.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)];
  });
  std::vector<std::pair<TokenId, double>> support;
  double mass = 0.0;
  for (TokenId id : order) {
    const double q = dist[static_cast<std::size_t>(id)];
    if (q <= 0.0) break;
    support.emplace_back(id, q);
    mass += q;
    // small slack so p = 1 is reached despite rounding in the running sum
    if (mass >= p - 1e-12) break;
  }
  for (auto& [_, q] : support) q /= mass;
  return support;
}

TokenId nucleus_sample(std::span<const double> dist, double p, Rng& rng) {
  const auto support = nucleus_support(dist, p);
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [id, q] : support) {
    acc += q;
    if (u < acc) return id;
  }
  return support.back().first;
}

TokenId argmax(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::kSize, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

std::vector<TokenId> generate(const StoryGenModel& model, const Conditioning& cond,
                              const DecodingConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<TokenId> story;
  const std::size_t limit = std::min(config.max_new_tokens, model.config().max_text);
  while (story.size() < limit) {
    const InputLayout layout = assemble_input(model.config(), cond, story);
    const Tensor logits = forward_logits(model, layout);
    const auto last = logits.row(logits.rows() - 1);
    TokenId next;
    if (config.mode == DecodingMode::kGreedy) {
      next = argmax(last);
    } else {
      Tensor row({last.size()}, std::vector<double>(last.begin(), last.end()));
      const Tensor probs = kernels::softmax(row);
      next = nucleus_sample(probs.data(), config.p, rng);
    }
    if (next == config.stop_token) break;
    story.push_back(next);
  }
  return story;
}

namespace {

enum class Pool { kMale, kFemale, kLocation, kNone };

Pool pool_of(const std::string& tok) {
  if (tok == "[location]") return Pool::kLocation;
  if (tok.rfind("[male", 0) == 0) return Pool::kMale;
  if (tok.rfind("[female", 0) == 0) return Pool::kFemale;
  return Pool::kNone;
}

void capitalize_sentences(std::string& s) {
  bool start = true;
  for (char& c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (start && std::isalpha(u)) {
      c = static_cast<char>(std::toupper(u));
      start = false;
    } else if (c == '.' || c == '!' || c == '?' || c == '\n') {
      start = true;
    } else if (!std::isspace(u) && c != '"' && c != '\'') {
      start = false;
    }
  }
}

}  // namespace

std::string realize(const std::vector<std::string>& tokens, const NamePools& names, Rng& rng) {
  std::map<std::string, std::string> assigned;
  std::vector<std::string> male = names.male, female = names.female, locations = names.locations;
  auto draw = [&](std::vector<std::string>& pool, const std::string& tok) {
    if (pool.empty()) {
      fail(ErrorKind::kResource, "no names left for placeholder " + tok);
    }
    const std::size_t i = rng.below(pool.size());
    std::string name = pool[i];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    return name;
  };

  std::vector<std::vector<std::string>> paragraphs(1);
  for (const auto& tok : tokens) {
    if (tok == "[sent]") {
      if (!paragraphs.back().empty()) paragraphs.emplace_back();
      continue;
    }
    if (!is_bracket_tag(tok)) {
      paragraphs.back().push_back(tok);
      continue;
    }
    const Pool pool = pool_of(tok);
    if (pool == Pool::kNone) continue;  // [UNK], [BOS], ...
    auto it = assigned.find(tok);
    if (it == assigned.end()) {
      auto& src = pool == Pool::kMale ? male : pool == Pool::kFemale ? female : locations;
      it = assigned.emplace(tok, draw(src, tok)).first;
    }
    paragraphs.back().push_back(it->second);
  }
  std::string out;
  for (const auto& para : paragraphs) {
    if (para.empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += detokenize(para);
  }
  capitalize_sentences(out);
  return out;
}

}  // namespace vwp
