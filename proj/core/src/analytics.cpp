#include "vwp/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "json.hpp"
#include "vwp/dataset_io.hpp"
#include "vwp/errors.hpp"
#include "vwp/tokenizer.hpp"

namespace vwp {

std::size_t role_index(char role) {
  for (std::size_t i = 0; i < kRoles.size(); ++i) {
    if (kRoles[i] == role) return i;
  }
  fail(ErrorKind::kData, std::string("invalid entity role '") + role + "'");
}

void EntityRoleGrid::validate() const {
  const std::size_t width = columns();
  if (!entities.empty() && width != entities.size()) {
    fail(ErrorKind::kData, "entity grid has " + std::to_string(entities.size()) +
                               " entities but " + std::to_string(width) + " columns");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) fail(ErrorKind::kData, "entity grid row " + std::to_string(r) + " is ragged");
    for (char c : rows[r]) role_index(c);
  }
}

EntityGridModel::EntityGridModel(std::size_t history, double alpha) : history_(history), alpha_(alpha) {
  if (!(alpha >= 0.0)) fail(ErrorKind::kConfig, "smoothing constant must be non-negative");
}

void EntityGridModel::observe(const EntityRoleGrid& grid) {
  grid.validate();
  for (std::size_t c = 0; c < grid.columns(); ++c) {
    std::string context(history_, '-');
    for (const auto& row : grid.rows) {
      counts_[context][role_index(row[c])] += 1.0;
      if (history_ > 0) {
        context.erase(0, 1);
        context.push_back(row[c]);
      }
    }
  }
}

double EntityGridModel::probability(const std::string& context, char role) const {
  const std::size_t k = role_index(role);
  const auto it = counts_.find(context);
  double count = 0.0, total = 0.0;
  if (it != counts_.end()) {
    count = it->second[k];
    for (double v : it->second) total += v;
  }
  const double denom = total + alpha_ * static_cast<double>(kRoles.size());
  if (denom == 0.0) return 1.0 / static_cast<double>(kRoles.size());
  return (count + alpha_) / denom;
}

EntityGridModel train_entity_grid(const std::vector<EntityRoleGrid>& corpus, std::size_t history,
                                  double alpha) {
  EntityGridModel model(history, alpha);
  for (const auto& g : corpus) model.observe(g);
  return model;
}

CoherenceScore score_coherence(const EntityGridModel& model, const EntityRoleGrid& grid) {
  grid.validate();
  CoherenceScore s;
  const std::size_t h = model.history();
  for (std::size_t c = 0; c < grid.columns(); ++c) {
    std::string context(h, '-');
    for (const auto& row : grid.rows) {
      s.ll += std::log(model.probability(context, row[c]));
      if (h > 0) {
        context.erase(0, 1);
        context.push_back(row[c]);
      }
    }
  }
  const std::size_t cells = grid.sentences() * grid.columns();
  s.avg_ll = cells == 0 ? 0.0 : s.ll / static_cast<double>(cells);
  return s;
}

namespace {

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::vector<std::string> as_set(const std::vector<std::string>& tokens) {
  std::set<std::string> s;
  for (const auto& t : tokens) s.insert(lower(t));
  return {s.begin(), s.end()};
}

bool is_person_placeholder(const std::string& t) {
  return is_bracket_tag(t) && (t.rfind("[male", 0) == 0 || t.rfind("[female", 0) == 0);
}

std::vector<std::string> placeholder_characters(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (is_person_placeholder(t)) out.push_back(t);
  }
  return as_set(out);
}

}  // namespace

std::vector<std::string> role_set(const SrlStory& story, const std::string& role) {
  if (role == "predicate") return as_set(story.predicates);
  if (role == "characters") return as_set(story.characters);
  const auto it = story.arguments.find(role);
  return it == story.arguments.end() ? std::vector<std::string>{} : as_set(it->second);
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

JaccardReport jaccard_similarity(const std::vector<SrlStory>& stories) {
  std::map<std::string, std::vector<const SrlStory*>> groups;
  for (const auto& s : stories) groups[s.sequence_id].push_back(&s);
  JaccardReport report;
  std::map<std::string, double> sums;
  for (const auto& role : jaccard_roles()) sums[role] = 0.0;
  for (const auto& [id, members] : groups) {
    if (members.size() < 2) {
      ++report.skipped;
      continue;
    }
    ++report.sequences;
    for (const auto& role : jaccard_roles()) {
      double total = 0.0;
      std::size_t pairs = 0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          total += jaccard(role_set(*members[i], role), role_set(*members[j], role));
          ++pairs;
        }
      }
      sums[role] += total / static_cast<double>(pairs);
    }
  }
  for (const auto& [role, sum] : sums) {
    report.by_role[role] = report.sequences == 0 ? 0.0 : sum / static_cast<double>(report.sequences);
  }
  return report;
}

EventDiversity event_diversity(const std::vector<SrlStory>& stories, std::size_t top_k) {
  EventDiversity d;
  std::set<std::string> vocab;
  std::map<std::string, std::size_t> verb_counts;
  for (const auto& s : stories) {
    for (const auto& t : s.tokens) vocab.insert(lower(t));
    d.tokens += s.tokens.size();
    for (const auto& p : s.predicates) ++verb_counts[lower(p)];
    d.verb_occurrences += s.predicates.size();
  }
  d.vocab = vocab.size();
  d.unique_verbs = verb_counts.size();
  if (d.vocab > 0) d.verb_vocab_pct = 100.0 * static_cast<double>(d.unique_verbs) / static_cast<double>(d.vocab);
  if (d.tokens > 0) d.verb_token_pct = 100.0 * static_cast<double>(d.unique_verbs) / static_cast<double>(d.tokens);

  std::vector<std::pair<std::string, std::size_t>> ranked(verb_counts.begin(), verb_counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::size_t top_mass = 0;
  for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) {
    d.top_verbs.push_back(ranked[i].first);
    top_mass += ranked[i].second;
  }
  if (d.verb_occurrences > 0) {
    d.diverse_verb_pct = 100.0 * static_cast<double>(d.verb_occurrences - top_mass) /
                         static_cast<double>(d.verb_occurrences);
  }
  return d;
}

std::vector<double> predicate_ngram_diversity(const std::vector<SrlStory>& stories, std::size_t max_n) {
  std::vector<double> ratios;
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::set<std::vector<std::string>> distinct;
    std::size_t total = 0;
    for (const auto& s : stories) {
      if (s.predicates.size() < n) continue;
      for (std::size_t i = 0; i + n <= s.predicates.size(); ++i) {
        std::vector<std::string> gram;
        for (std::size_t k = 0; k < n; ++k) gram.push_back(lower(s.predicates[i + k]));
        distinct.insert(std::move(gram));
        ++total;
      }
    }
    ratios.push_back(total == 0 ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(total));
  }
  return ratios;
}

const char* to_string(GroundLabel label) {
  switch (label) {
    case GroundLabel::kGrounded: return "Grounded";
    case GroundLabel::kInferred: return "Inferred";
    case GroundLabel::kHallucinated: return "Hallucinated";
  }
  return "?";
}

GroundLabel parse_ground_label(const std::string& s) {
  const std::string l = lower(s);
  if (l == "grounded") return GroundLabel::kGrounded;
  if (l == "inferred") return GroundLabel::kInferred;
  if (l == "hallucinated" || l == "hallucianted") return GroundLabel::kHallucinated;
  fail(ErrorKind::kData, "unknown groundedness label '" + s + "'");
}

double percent_1dp(std::size_t count, std::size_t total) {
  if (total == 0) return 0.0;
  const auto tenths = (2 * static_cast<std::uint64_t>(count) * 1000 + total) / (2 * static_cast<std::uint64_t>(total));
  return static_cast<double>(tenths) / 10.0;
}

std::map<std::string, GroundednessRow> groundedness_from_counts(
    const std::map<std::string, std::array<std::size_t, 3>>& counts) {
  std::map<std::string, GroundednessRow> table;
  for (const auto& [kind, c] : counts) {
    GroundednessRow row;
    row.counts = c;
    for (std::size_t i = 0; i < 3; ++i) row.percent[i] = percent_1dp(c[i], row.total());
    table[kind] = row;
  }
  return table;
}

std::map<std::string, GroundednessRow> groundedness_table(
    const std::vector<GroundednessAnnotation>& annotations) {
  std::map<std::string, std::array<std::size_t, 3>> counts;
  for (const auto& a : annotations) ++counts[a.kind][static_cast<std::size_t>(a.label)];
  return groundedness_from_counts(counts);
}

ReviewPlan plan_review_sample(std::size_t stories_written) {
  ReviewPlan plan;
  if (stories_written < 10) {
    plan.formula = 10;
  } else {
    // Guard exact powers of ten against log10 rounding up.
    plan.formula = static_cast<std::size_t>(
        std::ceil(10.0 * std::log10(static_cast<double>(stories_written)) - 1e-9));
  }
  plan.count = std::min(plan.formula, stories_written);
  return plan;
}

bool qualify(const WorkerStats& stats) {
  return stats.acceptance_rate >= 0.90 && stats.quality > 3.1 && stats.accepted >= 5;
}

CorpusStats corpus_stats(const std::vector<ImageSequenceRecord>& dataset) {
  CorpusStats s;
  double tokens = 0.0, events = 0.0, characters = 0.0;
  bool first = true;
  for (const auto& r : dataset) {
    for (const auto& story : r.stories) {
      ++s.texts;
      const std::size_t n = r.images.size();
      s.images_min = first ? n : std::min(s.images_min, n);
      s.images_max = first ? n : std::max(s.images_max, n);
      first = false;
      std::size_t count = 0;
      const auto surface = story_surface_tokens(story);
      for (const auto& t : surface) count += t != "[sent]";
      tokens += static_cast<double>(count);
      events += static_cast<double>(story.srl.size());
      std::set<std::string> names;
      for (const auto& span : story.entity_spans) {
        if (span.kind == EntityKind::kPerson) names.insert(lower(span.name));
      }
      for (const auto& t : placeholder_characters(surface)) names.insert(t);
      characters += static_cast<double>(names.size());
    }
  }
  if (s.texts > 0) {
    const double n = static_cast<double>(s.texts);
    s.tokens_per_text = tokens / n;
    s.events_per_text = events / n;
    s.characters_per_text = characters / n;
  }
  return s;
}

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::kData, std::string(what) + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) fail(ErrorKind::kData, std::string(what) + " must be a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

AnnotatedStory parse_annotated_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kData, "annotated story must be a JSON object");
  AnnotatedStory a;
  a.srl.sequence_id = j.value("sequence_id", std::string());
  if (a.srl.sequence_id.empty()) fail(ErrorKind::kData, "annotated story lacks sequence_id");
  if (j.contains("tokens")) a.srl.tokens = string_list(j["tokens"], "tokens");
  if (j.contains("srl")) {
    for (const auto& ev : j["srl"]) {
      a.srl.predicates.push_back(lower(ev.at("predicate").get<std::string>()));
      if (ev.contains("args")) {
        for (const auto& [role, toks] : ev["args"].items()) {
          const std::string r = lower(role);
          if (r != "arg0" && r != "arg1" && r != "arg2" && r != "arg-loc") {
            fail(ErrorKind::kData, "unknown SRL role '" + role + "' in " + a.srl.sequence_id);
          }
          auto& dst = a.srl.arguments[r];
          for (auto& t : string_list(toks, "SRL arguments")) dst.push_back(lower(t));
        }
      }
    }
  }
  a.srl.characters = j.contains("characters") ? as_set(string_list(j["characters"], "characters"))
                                              : placeholder_characters(a.srl.tokens);
  if (j.contains("entity_grid")) {
    const auto& g = j["entity_grid"];
    EntityRoleGrid grid;
    if (g.contains("entities")) grid.entities = string_list(g["entities"], "entities");
    for (const auto& row : g.at("rows")) {
      std::vector<char> cells;
      for (const auto& cell : string_list(row, "entity grid row")) {
        if (cell.size() != 1) fail(ErrorKind::kData, "invalid entity role '" + cell + "'");
        cells.push_back(cell[0]);
      }
      grid.rows.push_back(std::move(cells));
    }
    grid.validate();
    a.entity_grid = std::move(grid);
  }
  if (j.contains("groundedness")) {
    for (const auto& g : j["groundedness"]) {
      GroundednessAnnotation ann;
      ann.kind = lower(g.at("kind").get<std::string>());
      if (ann.kind != "event" && ann.kind != "argument") {
        fail(ErrorKind::kData, "unknown groundedness unit '" + ann.kind + "'");
      }
      ann.label = parse_ground_label(g.at("label").get<std::string>());
      a.groundedness.push_back(ann);
    }
  }
  return a;
}

std::vector<AnnotatedStory> read_annotated(const std::string& path) {
  std::vector<AnnotatedStory> out;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    try {
      out.push_back(parse_annotated_line(std::string(line)));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(number) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kData, path + ":" + std::to_string(number) + ": " + e.what());
    }
  });
  return out;
}

std::vector<SrlStory> srl_stories(const std::vector<ImageSequenceRecord>& dataset) {
  std::vector<SrlStory> out;
  for (const auto& r : dataset) {
    for (const auto& story : r.stories) {
      SrlStory s;
      s.sequence_id = r.id;
      for (const auto& t : story_surface_tokens(story)) {
        if (t != "[sent]") s.tokens.push_back(t);
      }
      for (const auto& ev : story.srl) {
        s.predicates.push_back(lower(ev.predicate));
        for (const auto& [role, toks] : ev.args) {
          auto& dst = s.arguments[lower(role)];
          for (const auto& t : toks) dst.push_back(lower(t));
        }
      }
      s.characters = placeholder_characters(s.tokens);
      for (const auto& span : story.entity_spans) {
        if (span.kind == EntityKind::kPerson) s.characters.push_back(lower(span.name));
      }
      s.characters = as_set(s.characters);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace vwp
