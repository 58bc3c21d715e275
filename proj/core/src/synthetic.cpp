#include "vwp/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"
#include "vwp/errors.hpp"
#include "vwp/rng.hpp"

namespace vwp {

std::string pattern_word(unsigned mask) { return "pattern" + std::to_string(mask); }

Vocabulary learnability_vocab(std::size_t characters) {
  const auto& specials = special_tokens();
  std::vector<std::string> tokens(specials.begin(), specials.end());
  for (unsigned m = 1; m < (1u << characters); ++m) tokens.push_back(pattern_word(m));
  return Vocabulary::from_tokens(tokens);
}

namespace {

std::vector<std::vector<double>> orthonormal(std::size_t count, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> basis;
  while (basis.size() < count) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

CharacterInstance instance(std::size_t image, Rng& rng) {
  CharacterInstance inst;
  inst.image_index = image;
  inst.bbox = {static_cast<int>(rng.below(100)), static_cast<int>(rng.below(100)), 40, 80};
  inst.sharpness = rng.uniform();
  return inst;
}

}  // namespace

std::vector<ImageSequenceRecord> make_learnability_corpus(const LearnabilityConfig& config) {
  if (config.characters == 0 || config.characters > 5 || config.feature_dim < config.characters) {
    fail(ErrorKind::kConfig, "learnability corpus needs 1..5 characters and feature_dim >= characters");
  }
  const Vocabulary vocab = learnability_vocab(config.characters);
  const unsigned full = (1u << config.characters) - 1;
  Rng rng(config.seed);
  std::vector<ImageSequenceRecord> out;
  for (std::size_t s = 0; s < config.sequences; ++s) {
    ImageSequenceRecord r;
    r.id = "syn" + std::to_string(s);
    const auto feats = orthonormal(config.characters, config.feature_dim, rng);
    std::vector<unsigned> masks(config.images);
    unsigned seen = 0;
    do {
      seen = 0;
      for (auto& m : masks) {
        m = 1 + static_cast<unsigned>(rng.below(full));
        seen |= m;
      }
    } while (seen != full);

    for (std::size_t c = 0; c < config.characters; ++c) {
      CharacterRecord ch;
      ch.char_id = r.id + "_c" + std::to_string(c);
      ch.representative_feat = feats[c];
      for (std::size_t a = 0; a < config.images; ++a) {
        if (masks[a] & (1u << c)) ch.instances.push_back(instance(a, rng));
      }
      r.characters.push_back(std::move(ch));
    }
    std::string text;
    for (std::size_t a = 0; a < config.images; ++a) {
      ImageRecord im;
      im.image_id = r.id + "_i" + std::to_string(a);
      im.global_feat.assign(config.feature_dim, 0.0);
      for (std::size_t c = 0; c < config.characters; ++c) {
        if (!(masks[a] & (1u << c))) continue;
        for (std::size_t i = 0; i < config.feature_dim; ++i) im.global_feat[i] += feats[c][i];
      }
      r.images.push_back(std::move(im));
      if (a) text += " [sent] ";
      text += pattern_word(masks[a]);
    }
    StoryRecord story;
    story.raw_text = text;
    r.stories.push_back(std::move(story));
    out.push_back(std::move(r));
  }
  encode_stories(out, vocab);
  return out;
}

namespace {

struct FixtureName {
  const char* name;
  unsigned male;
  unsigned female;
};

constexpr FixtureName kNames[] = {
    {"Tom", 980, 3},  {"James", 960, 5}, {"Leo", 870, 10}, {"Omar", 640, 2}, {"Anna", 4, 990},
    {"Mia", 3, 910},  {"Grace", 6, 880}, {"Lena", 2, 700}, {"Sam", 300, 300}, {"Robin", 120, 120},
};

constexpr const char* kLocations[] = {"Riverside Park", "Oak Street", "the Harbor", "Maple Lake",
                                      "Central Station"};

struct Verb {
  const char* lemma;
  const char* third;
};
constexpr Verb kVerbs[] = {{"walk", "walks"}, {"carry", "carries"}, {"find", "finds"},
                           {"call", "calls"}, {"tell", "tells"},    {"help", "helps"},
                           {"watch", "watches"}, {"meet", "meets"}, {"open", "opens"},
                           {"give", "gives"}};

constexpr const char* kNouns[] = {"box", "letter", "dog", "map", "cake", "ball", "key", "lamp"};

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

template <typename T, std::size_t N>
const T& pick(const T (&arr)[N], Rng& rng) {
  return arr[rng.below(N)];
}

}  // namespace

std::string fixture_gender_csv() {
  std::string csv = "name,male_count,female_count\n";
  for (const auto& n : kNames) {
    csv += std::string(n.name) + "," + std::to_string(n.male) + "," + std::to_string(n.female) + "\n";
  }
  return csv;
}

std::vector<ImageSequenceRecord> make_fixture_dataset(const FixtureConfig& config) {
  Rng rng(config.seed);
  const std::size_t d = config.feature_dim;
  auto random_vec = [&] {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.normal();
    return v;
  };
  std::vector<ImageSequenceRecord> out;
  for (std::size_t s = 0; s < config.sequences; ++s) {
    ImageSequenceRecord r;
    r.id = "s" + std::to_string(s + 1);
    const std::size_t n_images = 5 + rng.below(3);
    const std::size_t n_chars = 2 + rng.below(2);
    std::vector<std::size_t> cast;
    while (cast.size() < n_chars) {
      const std::size_t k = rng.below(std::size(kNames));
      if (std::find(cast.begin(), cast.end(), k) == cast.end()) cast.push_back(k);
    }
    std::vector<std::vector<bool>> present(n_images, std::vector<bool>(n_chars, false));
    for (std::size_t a = 0; a < n_images; ++a) {
      present[a][rng.below(n_chars)] = true;
      for (std::size_t c = 0; c < n_chars; ++c) {
        if (rng.uniform() < 0.4) present[a][c] = true;
      }
    }
    for (std::size_t c = 0; c < n_chars; ++c) {
      CharacterRecord ch;
      ch.char_id = r.id + "_" + lower(kNames[cast[c]].name);
      ch.representative_feat = random_vec();
      for (std::size_t a = 0; a < n_images; ++a) {
        if (present[a][c]) ch.instances.push_back(instance(a, rng));
      }
      r.characters.push_back(std::move(ch));
    }
    const std::size_t n_objects = 1 + rng.below(3);
    for (std::size_t o = 0; o < n_objects; ++o) {
      r.objects.push_back({r.id + "_o" + std::to_string(o), random_vec()});
    }
    for (std::size_t a = 0; a < n_images; ++a) {
      ImageRecord im;
      im.image_id = r.id + "_img" + std::to_string(a);
      im.global_feat.assign(d, 0.0);
      for (std::size_t c = 0; c < n_chars; ++c) {
        if (!present[a][c]) continue;
        for (std::size_t i = 0; i < d; ++i) im.global_feat[i] += r.characters[c].representative_feat[i];
      }
      for (auto& x : im.global_feat) x += 0.1 * rng.normal();
      r.images.push_back(std::move(im));
    }

    for (std::size_t k = 0; k < config.stories_per_sequence; ++k) {
      StoryRecord story;
      auto add_person = [&](std::size_t c) {
        const std::string name = kNames[cast[c]].name;
        story.entity_spans.push_back({story.raw_text.size(), story.raw_text.size() + name.size(),
                                      EntityKind::kPerson, name});
        story.raw_text += name;
        return lower(name);
      };
      for (std::size_t a = 0; a < n_images; ++a) {
        if (a) story.raw_text += " [sent] ";
        std::vector<std::size_t> here;
        for (std::size_t c = 0; c < n_chars; ++c) {
          if (present[a][c]) here.push_back(c);
        }
        const std::size_t subj = here[rng.below(here.size())];
        const Verb& verb = pick(kVerbs, rng);
        SrlEvent ev;
        ev.predicate = verb.lemma;
        ev.args["arg0"] = {add_person(subj)};
        story.raw_text += std::string(" ") + verb.third + " ";
        if (here.size() > 1 && rng.uniform() < 0.5) {
          std::size_t obj = here[rng.below(here.size())];
          if (obj == subj) obj = here[(std::find(here.begin(), here.end(), subj) - here.begin() + 1) % here.size()];
          ev.args["arg1"] = {add_person(obj)};
        } else {
          const std::string noun = pick(kNouns, rng);
          story.raw_text += "the " + noun;
          ev.args["arg1"] = {noun};
        }
        if (rng.uniform() < 0.4) {
          const std::string loc = pick(kLocations, rng);
          story.raw_text += " at ";
          story.entity_spans.push_back({story.raw_text.size(), story.raw_text.size() + loc.size(),
                                        EntityKind::kLocation, loc});
          story.raw_text += loc;
          ev.args["arg-loc"] = {lower(loc)};
        }
        story.raw_text += ".";
        story.srl.push_back(std::move(ev));
      }
      r.stories.push_back(std::move(story));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> make_annotated_fixture(const std::vector<ImageSequenceRecord>& dataset,
                                                std::uint64_t seed) {
  static const char* kLabels[] = {"Grounded", "Inferred", "Hallucinated"};
  Rng rng(seed);
  std::vector<std::string> lines;
  for (const auto& r : dataset) {
    for (const auto& story : r.stories) {
      nlohmann::json j;
      j["sequence_id"] = r.id;
      j["tokens"] = story_surface_tokens(story);
      std::vector<std::string> people;
      for (const auto& span : story.entity_spans) {
        if (span.kind != EntityKind::kPerson) continue;
        const std::string name = lower(span.name);
        if (std::find(people.begin(), people.end(), name) == people.end()) people.push_back(name);
      }
      j["characters"] = people;
      nlohmann::json srl = nlohmann::json::array();
      std::vector<std::string> entities;
      for (const auto& ev : story.srl) {
        srl.push_back({{"predicate", ev.predicate}, {"args", ev.args}});
        for (const char* role : {"arg0", "arg1"}) {
          const auto it = ev.args.find(role);
          if (it == ev.args.end()) continue;
          for (const auto& t : it->second) {
            if (std::find(entities.begin(), entities.end(), t) == entities.end()) entities.push_back(t);
          }
        }
      }
      j["srl"] = srl;
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& ev : story.srl) {
        std::vector<std::string> row(entities.size(), "-");
        for (std::size_t e = 0; e < entities.size(); ++e) {
          const auto has = [&](const char* role) {
            const auto it = ev.args.find(role);
            return it != ev.args.end() &&
                   std::find(it->second.begin(), it->second.end(), entities[e]) != it->second.end();
          };
          if (has("arg0")) row[e] = "S";
          else if (has("arg1")) row[e] = "O";
        }
        rows.push_back(row);
      }
      j["entity_grid"] = {{"entities", entities}, {"rows", rows}};
      nlohmann::json ground = nlohmann::json::array();
      for (const auto& ev : story.srl) {
        ground.push_back({{"kind", "event"}, {"label", kLabels[rng.below(3)]}});
        for (std::size_t i = 0; i < ev.args.size(); ++i) {
          ground.push_back({{"kind", "argument"}, {"label", kLabels[rng.below(3)]}});
        }
      }
      j["groundedness"] = ground;
      lines.push_back(j.dump());
    }
  }
  return lines;
}

}  // namespace vwp
