#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vwp/corpus.hpp"

namespace vwp {

// ---------------------------------------------------------------------------
// Entity grid coherence

/// Grammatical roles: subject, object, other, absent.
inline constexpr std::array<char, 4> kRoles = {'S', 'O', 'X', '-'};
std::size_t role_index(char role);

/// rows[sentence][entity]
struct EntityRoleGrid {
  std::vector<std::string> entities;
  std::vector<std::vector<char>> rows;

  std::size_t sentences() const { return rows.size(); }
  std::size_t columns() const { return rows.empty() ? entities.size() : rows.front().size(); }
  /// Throws kData on a ragged grid or a symbol outside the alphabet.
  void validate() const;
};

class EntityGridModel {
 public:
  explicit EntityGridModel(std::size_t history = 2, double alpha = 0.1);

  std::size_t history() const noexcept { return history_; }
  double alpha() const noexcept { return alpha_; }

  void observe(const EntityRoleGrid& grid);
  /// Smoothed p(role | context); context holds the previous `history` roles,
  /// oldest first. An unseen context with alpha 0 is uniform.
  double probability(const std::string& context, char role) const;
  const std::map<std::string, std::array<double, 4>>& counts() const noexcept { return counts_; }

 private:
  std::size_t history_;
  double alpha_;
  std::map<std::string, std::array<double, 4>> counts_;
};

EntityGridModel train_entity_grid(const std::vector<EntityRoleGrid>& corpus, std::size_t history = 2,
                                  double alpha = 0.1);

struct CoherenceScore {
  double ll = 0.0;
  double avg_ll = 0.0;
};
CoherenceScore score_coherence(const EntityGridModel& model, const EntityRoleGrid& grid);

// ---------------------------------------------------------------------------
// Event and argument analytics

inline const std::vector<std::string>& jaccard_roles() {
  static const std::vector<std::string> roles = {"characters", "predicate", "arg0",
                                                 "arg1",       "arg2",      "arg-loc"};
  return roles;
}

struct SrlStory {
  std::string sequence_id;
  std::vector<std::string> tokens;
  std::vector<std::string> predicates;  // ordered lemmas
  /// Role -> token set; keys from jaccard_roles() other than "predicate".
  std::map<std::string, std::vector<std::string>> arguments;
  std::vector<std::string> characters;
};

/// Lowercased token set of one role ("predicate" uses the predicate lemmas).
std::vector<std::string> role_set(const SrlStory& story, const std::string& role);

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct JaccardReport {
  std::map<std::string, double> by_role;
  std::size_t sequences = 0;
  std::size_t skipped = 0;  // sequences with fewer than two stories
};
JaccardReport jaccard_similarity(const std::vector<SrlStory>& stories);

struct EventDiversity {
  std::size_t vocab = 0;
  std::size_t unique_verbs = 0;
  std::size_t tokens = 0;
  std::size_t verb_occurrences = 0;
  double verb_vocab_pct = 0.0;
  double verb_token_pct = 0.0;
  double diverse_verb_pct = 0.0;
  std::vector<std::string> top_verbs;
};
EventDiversity event_diversity(const std::vector<SrlStory>& stories, std::size_t top_k = 5);

/// Unique:total ratio of predicate n-grams for n = 1..max_n, index n-1.
std::vector<double> predicate_ngram_diversity(const std::vector<SrlStory>& stories,
                                              std::size_t max_n = 3);

// ---------------------------------------------------------------------------
// Groundedness

enum class GroundLabel { kGrounded, kInferred, kHallucinated };
const char* to_string(GroundLabel label);
/// Accepts the misspelling "Hallucianted" as well.
GroundLabel parse_ground_label(const std::string& s);

struct GroundednessAnnotation {
  std::string kind;  // event | argument
  GroundLabel label = GroundLabel::kGrounded;
};

struct GroundednessRow {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> percent{};  // rounded half-up to one decimal
  std::size_t total() const { return counts[0] + counts[1] + counts[2]; }
};

/// Half-up rounding of 100 * count / total to one decimal, in exact
/// integer arithmetic.
double percent_1dp(std::size_t count, std::size_t total);

std::map<std::string, GroundednessRow> groundedness_table(
    const std::vector<GroundednessAnnotation>& annotations);
std::map<std::string, GroundednessRow> groundedness_from_counts(
    const std::map<std::string, std::array<std::size_t, 3>>& counts);

// ---------------------------------------------------------------------------
// Data collection planning

struct WorkerStats {
  std::string worker_id;
  double acceptance_rate = 0.0;
  double quality = 0.0;
  std::size_t accepted = 0;
  std::size_t stories_written = 0;  // n_w
};

struct ReviewPlan {
  std::size_t formula = 0;  // 10 below ten stories, else ceil(10 log10 n_w)
  std::size_t count = 0;    // formula capped at n_w
};
ReviewPlan plan_review_sample(std::size_t stories_written);

bool qualify(const WorkerStats& stats);

// ---------------------------------------------------------------------------
// Corpus statistics

struct CorpusStats {
  std::size_t texts = 0;
  std::size_t images_min = 0;
  std::size_t images_max = 0;
  double tokens_per_text = 0.0;
  double events_per_text = 0.0;
  double characters_per_text = 0.0;
};
CorpusStats corpus_stats(const std::vector<ImageSequenceRecord>& dataset);

// ---------------------------------------------------------------------------
// Annotated corpus (JSON Lines, one story per line)

struct AnnotatedStory {
  SrlStory srl;
  std::optional<EntityRoleGrid> entity_grid;
  std::vector<GroundednessAnnotation> groundedness;
};

AnnotatedStory parse_annotated_line(const std::string& line);
std::vector<AnnotatedStory> read_annotated(const std::string& path);

/// SRL view of a processed dataset: one story per record story, characters
/// from the placeholder tokens.
std::vector<SrlStory> srl_stories(const std::vector<ImageSequenceRecord>& dataset);

}  // namespace vwp
