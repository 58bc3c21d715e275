#include "vwp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "vwp/errors.hpp"
#include "vwp/porter.hpp"

namespace vwp {

namespace {

using NgramCounts = std::map<std::vector<std::string>, double>;

NgramCounts ngram_counts(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                    tokens.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1.0;
  }
  return counts;
}

void require_pairs(std::span<const EvalPair> pairs, const char* metric) {
  if (pairs.empty()) fail(ErrorKind::kData, std::string(metric) + ": empty corpus");
  for (const auto& p : pairs) {
    if (p.references.empty()) fail(ErrorKind::kData, std::string(metric) + ": pair without references");
  }
}

}  // namespace

// ---------------------------------------------------------------- BLEU

BleuStats bleu_stats(std::span<const EvalPair> pairs) {
  require_pairs(pairs, "BLEU");
  BleuStats s;
  for (const auto& p : pairs) {
    const double c = static_cast<double>(p.hypothesis.size());
    s.hyp_length += c;
    // closest reference length, shorter one on ties
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : p.references) {
      const double len = static_cast<double>(r.size());
      const double diff = std::abs(len - c), best_diff = std::abs(best - c);
      if (diff < best_diff || (diff == best_diff && len < best)) best = len;
    }
    s.ref_length += best;
    for (std::size_t n = 1; n <= 4; ++n) {
      const NgramCounts hyp = ngram_counts(p.hypothesis, n);
      NgramCounts max_ref;
      for (const auto& r : p.references) {
        for (const auto& [g, cnt] : ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], cnt);
      }
      for (const auto& [g, cnt] : hyp) {
        s.totals[n - 1] += cnt;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) s.matches[n - 1] += std::min(cnt, it->second);
      }
    }
  }
  return s;
}

double bleu_corpus(std::span<const EvalPair> pairs, int max_order) {
  if (max_order < 1 || max_order > 4) fail(ErrorKind::kConfig, "BLEU order must be 1..4");
  const BleuStats s = bleu_stats(pairs);
  if (s.hyp_length == 0.0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < max_order; ++n) {
    if (s.totals[n] == 0.0 || s.matches[n] == 0.0) return 0.0;
    log_sum += std::log(s.matches[n] / s.totals[n]);
  }
  const double bp = std::min(1.0, std::exp(1.0 - s.ref_length / s.hyp_length));
  return bp * std::exp(log_sum / max_order);
}

// -------------------------------------------------------------- METEOR

namespace {

struct AlignProblem {
  const Tokens* hyp;
  const Tokens* ref;
  std::vector<std::string> hyp_stem, ref_stem;
  std::size_t exact_max = 0, stem_max = 0;
};

std::size_t count_chunks(const std::vector<long>& ref_index) {
  std::size_t chunks = 0;
  for (std::size_t i = 0; i < ref_index.size(); ++i) {
    if (ref_index[i] < 0) continue;
    const bool continues = i > 0 && ref_index[i - 1] >= 0 && ref_index[i] == ref_index[i - 1] + 1;
    if (!continues) ++chunks;
  }
  return chunks;
}

// Exhaustive branch-and-bound over alignments with exactly exact_max
// surface matches and stem_max stem-only matches, minimising chunks.
class ChunkSearch {
 public:
  ChunkSearch(const AlignProblem& p, std::size_t budget)
      : p_(p), budget_(budget), used_(p.ref->size(), false), current_(p.hyp->size(), -1) {
    // remaining hypothesis tokens per surface from position i onward
    const auto& hyp = *p.hyp;
    std::unordered_map<std::string, std::size_t> ref_count;
    for (const auto& t : *p.ref) ++ref_count[t];
    std::unordered_map<std::string, std::size_t> hyp_count;
    for (const auto& t : hyp) ++hyp_count[t];
    for (const auto& [t, c] : hyp_count) {
      auto it = ref_count.find(t);
      need_exact_[t] = it == ref_count.end() ? 0 : std::min(c, it->second);
    }
    remaining_after_.assign(hyp.size(), 0);
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = hyp.size(); i-- > 0;) {
      remaining_after_[i] = seen[hyp[i]];
      ++seen[hyp[i]];
    }
  }

  bool run() {
    dfs(0, 0, 0, 0);
    return found_;
  }
  bool exhausted() const { return nodes_ <= budget_; }
  const std::vector<long>& best() const { return best_; }
  std::size_t best_chunks() const { return best_chunks_; }

 private:
  void dfs(std::size_t i, std::size_t exact, std::size_t stem, std::size_t chunks) {
    if (++nodes_ > budget_) return;
    if (found_ && chunks >= best_chunks_) return;
    const std::size_t n = p_.hyp->size();
    const std::size_t missing = (p_.exact_max - exact) + (p_.stem_max - stem);
    if (n - i < missing) return;
    if (i == n) {
      if (exact == p_.exact_max && stem == p_.stem_max) {
        found_ = true;
        best_chunks_ = chunks;
        best_ = current_;
      }
      return;
    }
    const auto& hyp = *p_.hyp;
    const auto& ref = *p_.ref;
    const long prev = i > 0 ? current_[i - 1] : -1;
    auto try_match = [&](std::size_t j) {
      const bool is_exact = hyp[i] == ref[j];
      if (!is_exact && (!stem_enabled() || p_.hyp_stem[i] != p_.ref_stem[j])) return;
      if (is_exact && exact == p_.exact_max) return;
      if (!is_exact && stem == p_.stem_max) return;
      if (!is_exact && need_exact_.at(hyp[i]) > remaining_after_[i]) return;
      const bool continues = prev >= 0 && static_cast<long>(j) == prev + 1;
      used_[j] = true;
      current_[i] = static_cast<long>(j);
      if (is_exact) --need_exact_[hyp[i]];
      dfs(i + 1, exact + (is_exact ? 1 : 0), stem + (is_exact ? 0 : 1), chunks + (continues ? 0 : 1));
      if (is_exact) ++need_exact_[hyp[i]];
      current_[i] = -1;
      used_[j] = false;
    };
    // continuing the current chunk first gives a tight bound early
    if (prev >= 0 && static_cast<std::size_t>(prev + 1) < ref.size() && !used_[prev + 1]) {
      try_match(static_cast<std::size_t>(prev + 1));
    }
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (used_[j] || (prev >= 0 && static_cast<long>(j) == prev + 1)) continue;
      try_match(j);
    }
    // leave hyp[i] unmatched only if its surface can still reach its exact quota
    auto it = need_exact_.find(hyp[i]);
    if (it->second <= remaining_after_[i]) dfs(i + 1, exact, stem, chunks);
  }

  bool stem_enabled() const { return !p_.hyp_stem.empty(); }

  const AlignProblem& p_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<bool> used_;
  std::vector<long> current_;
  std::vector<long> best_;
  std::size_t best_chunks_ = 0;
  bool found_ = false;
  std::unordered_map<std::string, std::size_t> need_exact_;
  std::vector<std::size_t> remaining_after_;
};

// In-order greedy: exact stage then stem stage, preferring the ref slot
// right after the previous match.
std::vector<long> greedy_align(const AlignProblem& p) {
  const auto& hyp = *p.hyp;
  const auto& ref = *p.ref;
  std::vector<long> idx(hyp.size(), -1);
  std::vector<bool> used(ref.size(), false);
  auto stage = [&](auto&& same) {
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (idx[i] >= 0) continue;
      const long prev = i > 0 ? idx[i - 1] : -1;
      long pick = -1;
      if (prev >= 0 && static_cast<std::size_t>(prev + 1) < ref.size() && !used[prev + 1] &&
          same(i, static_cast<std::size_t>(prev + 1))) {
        pick = prev + 1;
      }
      for (std::size_t j = 0; pick < 0 && j < ref.size(); ++j) {
        if (!used[j] && same(i, j)) pick = static_cast<long>(j);
      }
      if (pick >= 0) {
        idx[i] = pick;
        used[static_cast<std::size_t>(pick)] = true;
      }
    }
  };
  stage([&](std::size_t i, std::size_t j) { return hyp[i] == ref[j]; });
  if (!p.hyp_stem.empty()) {
    stage([&](std::size_t i, std::size_t j) { return p.hyp_stem[i] == p.ref_stem[j]; });
  }
  return idx;
}

}  // namespace

MeteorAlignment meteor_align(const Tokens& hypothesis, const Tokens& reference,
                             const MetricConfig& config) {
  AlignProblem p{&hypothesis, &reference, {}, {}, 0, 0};
  std::map<std::string, std::size_t> hc, rc;
  for (const auto& t : hypothesis) ++hc[t];
  for (const auto& t : reference) ++rc[t];
  std::map<std::string, std::size_t> exact_by_stem;
  for (const auto& [t, c] : hc) {
    auto it = rc.find(t);
    if (it == rc.end()) continue;
    const std::size_t k = std::min(c, it->second);
    p.exact_max += k;
    if (config.meteor_stem_stage) exact_by_stem[porter_stem(t)] += k;
  }
  if (config.meteor_stem_stage) {
    std::map<std::string, std::size_t> hs, rs;
    for (const auto& t : hypothesis) {
      p.hyp_stem.push_back(porter_stem(t));
      ++hs[p.hyp_stem.back()];
    }
    for (const auto& t : reference) {
      p.ref_stem.push_back(porter_stem(t));
      ++rs[p.ref_stem.back()];
    }
    for (const auto& [s, c] : hs) {
      auto it = rs.find(s);
      if (it == rs.end()) continue;
      const std::size_t e = exact_by_stem[s];
      p.stem_max += std::min(c - e, it->second - e);
    }
  }

  MeteorAlignment a;
  a.matches = p.exact_max + p.stem_max;
  if (a.matches == 0) {
    a.ref_index.assign(hypothesis.size(), -1);
    a.exhaustive = true;
    return a;
  }
  bool done = false;
  if (a.matches <= config.meteor_exhaustive_limit) {
    ChunkSearch search(p, config.meteor_search_budget);
    if (search.run()) {
      a.ref_index = search.best();
      a.exhaustive = search.exhausted();
      done = true;
    }
  }
  if (!done) a.ref_index = greedy_align(p);
  a.chunks = count_chunks(a.ref_index);
  a.matches = 0;
  for (std::size_t i = 0; i < hypothesis.size(); ++i) {
    if (a.ref_index[i] >= 0) ++a.matches;
    if (a.ref_index[i] >= 0 && hypothesis[i] == reference[static_cast<std::size_t>(a.ref_index[i])]) {
      ++a.exact_matches;
    }
  }
  return a;
}

double meteor_from_stats(const MeteorStats& s, const MetricConfig& config) {
  if (s.matches <= 0.0 || s.hyp_length <= 0.0 || s.ref_length <= 0.0) return 0.0;
  const double precision = s.matches / s.hyp_length;
  const double recall = s.matches / s.ref_length;
  const double fmean = (1.0 + config.meteor_recall_weight) * precision * recall /
                       (recall + config.meteor_recall_weight * precision);
  const double penalty = config.meteor_gamma * std::pow(s.chunks / s.matches, config.meteor_beta);
  return fmean * (1.0 - penalty);
}

double meteor_segment(const Tokens& hypothesis, const Tokens& reference,
                      const MetricConfig& config) {
  const MeteorAlignment a = meteor_align(hypothesis, reference, config);
  return meteor_from_stats({static_cast<double>(a.matches), static_cast<double>(a.chunks),
                            static_cast<double>(hypothesis.size()),
                            static_cast<double>(reference.size())},
                           config);
}

MeteorStats meteor_stats(std::span<const EvalPair> pairs, const MetricConfig& config) {
  require_pairs(pairs, "METEOR");
  MeteorStats total;
  for (const auto& p : pairs) {
    MeteorStats best;
    double best_score = -1.0;
    for (const auto& r : p.references) {
      const MeteorAlignment a = meteor_align(p.hypothesis, r, config);
      const MeteorStats s{static_cast<double>(a.matches), static_cast<double>(a.chunks),
                          static_cast<double>(p.hypothesis.size()), static_cast<double>(r.size())};
      const double score = meteor_from_stats(s, config);
      // ties fall back to the counts so the choice ignores reference order
      const bool better =
          score > best_score ||
          (score == best_score &&
           std::tuple(s.matches, -s.chunks, -s.ref_length) > std::tuple(best.matches, -best.chunks, -best.ref_length));
      if (better) {
        best_score = score;
        best = s;
      }
    }
    total.matches += best.matches;
    total.chunks += best.chunks;
    total.hyp_length += best.hyp_length;
    total.ref_length += best.ref_length;
  }
  return total;
}

double meteor(std::span<const EvalPair> pairs, const MetricConfig& config) {
  return meteor_from_stats(meteor_stats(pairs, config), config);
}

// ------------------------------------------------------------- ROUGE-L

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_pair(const Tokens& hypothesis, const Tokens& reference, double beta) {
  const double l = static_cast<double>(lcs_length(hypothesis, reference));
  if (l == 0.0) return 0.0;
  const double r = l / static_cast<double>(reference.size());
  const double p = l / static_cast<double>(hypothesis.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * r * p / (r + b2 * p);
}

double rouge_l(std::span<const EvalPair> pairs, double beta) {
  require_pairs(pairs, "ROUGE-L");
  double sum = 0.0;
  for (const auto& p : pairs) {
    double best = 0.0;
    for (const auto& r : p.references) best = std::max(best, rouge_l_pair(p.hypothesis, r, beta));
    sum += best;
  }
  return sum / static_cast<double>(pairs.size());
}

// --------------------------------------------------------------- CIDEr

namespace {

using SparseVec = std::map<std::vector<std::string>, double>;

SparseVec tfidf(const NgramCounts& counts, const std::map<std::vector<std::string>, double>& idf) {
  SparseVec v;
  for (const auto& [g, c] : counts) {
    auto it = idf.find(g);
    const double w = it == idf.end() ? 0.0 : it->second;
    if (w > 0.0) v[g] = c * w;
  }
  return v;
}

double cosine(const SparseVec& a, const SparseVec& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, x] : a) {
    na += x * x;
    auto it = b.find(g);
    if (it != b.end()) dot += x * it->second;
  }
  for (const auto& [_, y] : b) nb += y * y;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double cider(std::span<const EvalPair> pairs, const MetricConfig& config) {
  require_pairs(pairs, "CIDEr");
  if (pairs.size() < 2) fail(ErrorKind::kData, "CIDEr needs at least two images");
  const double corpus = static_cast<double>(pairs.size());
  double total = 0.0;
  for (int n = 1; n <= config.cider_max_order; ++n) {
    const auto order = static_cast<std::size_t>(n);
    std::map<std::vector<std::string>, double> df;
    for (const auto& p : pairs) {
      std::set<std::vector<std::string>> seen;
      for (const auto& r : p.references) {
        for (const auto& [g, _] : ngram_counts(r, order)) seen.insert(g);
      }
      for (const auto& g : seen) df[g] += 1.0;
    }
    // n-grams absent from every reference have df 0
    std::map<std::vector<std::string>, double> idf;
    for (const auto& p : pairs) {
      for (const auto& [g, _] : ngram_counts(p.hypothesis, order)) {
        const double d = df.count(g) ? df[g] : 0.0;
        idf[g] = std::max(0.0, std::log(corpus / (1.0 + d)));
      }
      for (const auto& r : p.references) {
        for (const auto& [g, _] : ngram_counts(r, order)) {
          idf[g] = std::max(0.0, std::log(corpus / (1.0 + df[g])));
        }
      }
    }
    double order_sum = 0.0;
    for (const auto& p : pairs) {
      const SparseVec h = tfidf(ngram_counts(p.hypothesis, order), idf);
      double s = 0.0;
      for (const auto& r : p.references) s += cosine(h, tfidf(ngram_counts(r, order), idf));
      order_sum += s / static_cast<double>(p.references.size());
    }
    total += order_sum / corpus;
  }
  return config.cider_scale * total / config.cider_max_order;
}

// --------------------------------------------------------- aggregation

std::map<std::string, double> evaluate_all(std::span<const EvalPair> pairs,
                                           const MetricConfig& config) {
  std::map<std::string, double> out;
  for (int n = 1; n <= config.bleu_max_order; ++n) {
    out["B-" + std::to_string(n)] = bleu_corpus(pairs, n);
  }
  out["M"] = meteor(pairs, config);
  out["R-L"] = rouge_l(pairs, config.rouge_beta);
  out["C"] = pairs.size() >= 2 ? cider(pairs, config) : 0.0;
  return out;
}

std::string significance_band(double mean, double reference_mean, double reference_std,
                              bool* zero_variance) {
  const double diff = std::abs(mean - reference_mean);
  if (zero_variance) *zero_variance = false;
  if (reference_std <= 0.0) {
    if (diff == 0.0) return "";
    if (zero_variance) *zero_variance = true;
    return "**";
  }
  const double k = diff / reference_std;
  if (k >= 3.0) return "**";
  if (k >= 2.0) return "*";
  if (k >= 1.0) return "+";
  return "";
}

MetricReport aggregate_runs(
    const std::map<std::string, std::vector<std::map<std::string, double>>>& runs,
    const std::string& reference_system) {
  MetricReport report;
  report.reference_system = reference_system;
  for (const auto& [system, seeds] : runs) {
    if (seeds.empty()) fail(ErrorKind::kData, "system '" + system + "' has no runs");
    std::map<std::string, std::vector<double>> values;
    for (const auto& run : seeds) {
      for (const auto& [metric, v] : run) values[metric].push_back(v);
    }
    for (const auto& [metric, vs] : values) {
      MetricSummary s;
      s.runs = vs.size();
      s.mean = std::accumulate(vs.begin(), vs.end(), 0.0) / static_cast<double>(vs.size());
      double sq = 0.0;
      for (double v : vs) sq += (v - s.mean) * (v - s.mean);
      s.std = std::sqrt(sq / static_cast<double>(vs.size()));
      report.systems[system][metric] = s;
    }
  }
  if (!reference_system.empty()) {
    auto ref = report.systems.find(reference_system);
    if (ref == report.systems.end()) {
      fail(ErrorKind::kData, "reference system '" + reference_system + "' not among the runs");
    }
    for (auto& [system, metrics] : report.systems) {
      if (system == reference_system) continue;
      for (auto& [metric, s] : metrics) {
        auto r = ref->second.find(metric);
        if (r == ref->second.end()) continue;
        s.band = significance_band(s.mean, r->second.mean, r->second.std, &s.zero_variance);
      }
    }
  }
  return report;
}

namespace {

const std::vector<std::string>& metric_order() {
  static const std::vector<std::string> kOrder = {"B-1", "B-2", "B-3", "B-4", "M", "R-L", "C"};
  return kOrder;
}

std::vector<std::string> metrics_in(const MetricReport& report) {
  std::set<std::string> present;
  for (const auto& [_, m] : report.systems) {
    for (const auto& [k, __] : m) present.insert(k);
  }
  std::vector<std::string> out;
  for (const auto& k : metric_order()) {
    if (present.erase(k)) out.push_back(k);
  }
  out.insert(out.end(), present.begin(), present.end());
  return out;
}

}  // namespace

std::string report_table(const MetricReport& report) {
  const auto metrics = metrics_in(report);
  std::size_t name_w = 6;
  for (const auto& [s, _] : report.systems) name_w = std::max(name_w, s.size());
  std::ostringstream out;
  char buf[64];
  out << std::string(name_w, ' ');
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "  %16s", m.c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& [system, values] : report.systems) {
    out << system << std::string(name_w - system.size(), ' ');
    for (const auto& m : metrics) {
      auto it = values.find(m);
      if (it == values.end()) {
        std::snprintf(buf, sizeof buf, "  %16s", "-");
      } else {
        const auto& s = it->second;
        char cell[48];
        std::snprintf(cell, sizeof cell, "%.2f±%.2f%s", s.mean * kReportScale, s.std * kReportScale,
                      s.band.c_str());
        // "±" is two bytes in UTF-8
        std::snprintf(buf, sizeof buf, "  %17s", cell);
      }
      out << buf;
    }
    out << '\n';
  }
  if (!report.reference_system.empty()) {
    out << "bands vs " << report.reference_system << ": + >=1 std, * >=2 std, ** >=3 std\n";
  }
  return out.str();
}

std::string report_json(const MetricReport& report) {
  nlohmann::json j;
  j["reference_system"] = report.reference_system;
  j["scale"] = kReportScale;
  nlohmann::json systems = nlohmann::json::object();
  for (const auto& [system, metrics] : report.systems) {
    nlohmann::json ms = nlohmann::json::object();
    for (const auto& [metric, s] : metrics) {
      ms[metric] = {{"mean", s.mean * kReportScale},
                    {"std", s.std * kReportScale},
                    {"runs", s.runs},
                    {"band", s.band},
                    {"zero_variance", s.zero_variance}};
    }
    systems[system] = ms;
  }
  j["systems"] = systems;
  return j.dump(2);
}

}  // namespace vwp
