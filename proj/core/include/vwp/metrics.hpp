#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vwp {

using Tokens = std::vector<std::string>;

struct EvalPair {
  Tokens hypothesis;
  std::vector<Tokens> references;
};

struct MetricConfig {
  // METEOR, original formulation: F_mean = 10PR / (R + 9P)
  double meteor_recall_weight = 9.0;
  double meteor_gamma = 0.5;
  double meteor_beta = 3.0;
  bool meteor_stem_stage = true;
  std::size_t meteor_exhaustive_limit = 20;    // matched unigrams
  std::size_t meteor_search_budget = 2000000;  // DFS nodes per alignment
  double rouge_beta = 1.2;
  int cider_max_order = 4;
  double cider_scale = 10.0;
  int bleu_max_order = 4;
};

// ---------------------------------------------------------------- BLEU

struct BleuStats {
  std::array<double, 4> matches{};  // clipped n-gram matches per order
  std::array<double, 4> totals{};   // hypothesis n-grams per order
  double hyp_length = 0;
  double ref_length = 0;  // closest reference length, summed
};

BleuStats bleu_stats(std::span<const EvalPair> pairs);
/// Cumulative corpus BLEU with uniform weights over orders 1..max_order.
double bleu_corpus(std::span<const EvalPair> pairs, int max_order);

// -------------------------------------------------------------- METEOR

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t exact_matches = 0;
  std::size_t chunks = 0;
  std::vector<long> ref_index;  // per hypothesis token, -1 when unmatched
  bool exhaustive = false;
};

/// Maximum staged unigram matching (exact, then Porter stems on the rest)
/// with the fewest chunks among maximum matchings.
MeteorAlignment meteor_align(const Tokens& hypothesis, const Tokens& reference,
                             const MetricConfig& config = {});

struct MeteorStats {
  double matches = 0;
  double chunks = 0;
  double hyp_length = 0;
  double ref_length = 0;
};

double meteor_from_stats(const MeteorStats& s, const MetricConfig& config = {});
double meteor_segment(const Tokens& hypothesis, const Tokens& reference,
                      const MetricConfig& config = {});
/// Corpus METEOR: per pair the best-scoring reference is kept and its
/// counts are pooled before the final formula.
double meteor(std::span<const EvalPair> pairs, const MetricConfig& config = {});
MeteorStats meteor_stats(std::span<const EvalPair> pairs, const MetricConfig& config = {});

// ------------------------------------------------------------- ROUGE-L

std::size_t lcs_length(const Tokens& a, const Tokens& b);
double rouge_l_pair(const Tokens& hypothesis, const Tokens& reference, double beta = 1.2);
/// Mean over pairs of the best-reference LCS F-measure.
double rouge_l(std::span<const EvalPair> pairs, double beta = 1.2);

// --------------------------------------------------------------- CIDEr

/// Plain CIDEr over the corpus: TF-IDF n-gram cosine, n = 1..max_order,
/// IDF = max(0, log(|corpus| / (1 + df))). Requires at least two pairs.
double cider(std::span<const EvalPair> pairs, const MetricConfig& config = {});

// --------------------------------------------------------- aggregation

/// Every metric in one pass; keys B-1..B-4, M, R-L, C. Scores are in
/// [0,1] except CIDEr in [0,10].
std::map<std::string, double> evaluate_all(std::span<const EvalPair> pairs,
                                           const MetricConfig& config = {});

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population std over runs
  std::size_t runs = 0;
  std::string band;   // "", "+", "*", "**"
  bool zero_variance = false;
};

/// system -> metric -> summary
struct MetricReport {
  std::string reference_system;
  std::map<std::string, std::map<std::string, MetricSummary>> systems;
};

/// Band of a difference in units of the reference std.
std::string significance_band(double mean, double reference_mean, double reference_std,
                              bool* zero_variance = nullptr);

/// runs: system -> list of per-seed metric maps.
MetricReport aggregate_runs(
    const std::map<std::string, std::vector<std::map<std::string, double>>>& runs,
    const std::string& reference_system);

/// Reports show every score multiplied by this factor.
inline constexpr double kReportScale = 100.0;

/// Aligned text table, scores x100.
std::string report_table(const MetricReport& report);
/// Sorted-key JSON, scores x100.
std::string report_json(const MetricReport& report);

}  // namespace vwp
