#include "vwp/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "vwp/errors.hpp"
#include "vwp/rng.hpp"
#include "vwp/tokenizer.hpp"

namespace vwp {

const char* to_string(Gender g) {
  switch (g) {
    case Gender::kMale: return "male";
    case Gender::kFemale: return "female";
    case Gender::kUnknown: return "unknown";
  }
  return "unknown";
}

Gender parse_gender(const std::string& s) {
  if (s == "male") return Gender::kMale;
  if (s == "female") return Gender::kFemale;
  if (s == "unknown" || s.empty()) return Gender::kUnknown;
  fail(ErrorKind::kData, "unknown gender '" + s + "'");
}

std::size_t ImageSequenceRecord::feature_dim() const {
  return images.empty() ? 0 : images.front().global_feat.size();
}

void validate_record(const ImageSequenceRecord& r, const IngestLimits& limits) {
  auto bad = [&](const std::string& msg) { fail(ErrorKind::kData, "sequence '" + r.id + "': " + msg); };
  if (r.id.empty()) fail(ErrorKind::kData, "record without id");
  if (r.images.size() < limits.min_images || r.images.size() > limits.max_images) {
    bad("has " + std::to_string(r.images.size()) + " images, expected " +
        std::to_string(limits.min_images) + ".." + std::to_string(limits.max_images));
  }
  if (r.characters.size() > limits.max_characters) {
    bad("has " + std::to_string(r.characters.size()) + " characters, limit " +
        std::to_string(limits.max_characters));
  }
  if (r.objects.size() > limits.max_objects) {
    bad("has " + std::to_string(r.objects.size()) + " objects, limit " +
        std::to_string(limits.max_objects));
  }
  const std::size_t d = r.feature_dim();
  if (d == 0) bad("empty global feature vector");
  for (const auto& im : r.images) {
    if (im.global_feat.size() != d) bad("image '" + im.image_id + "' feature dimension mismatch");
  }
  for (const auto& c : r.characters) {
    if (c.representative_feat.size() != d) {
      bad("character '" + c.char_id + "' feature dimension mismatch");
    }
    for (const auto& inst : c.instances) {
      if (inst.image_index >= r.images.size()) {
        bad("character '" + c.char_id + "' instance addresses missing image " +
            std::to_string(inst.image_index));
      }
    }
  }
  for (const auto& o : r.objects) {
    if (o.feat.size() != d) bad("object '" + o.object_id + "' feature dimension mismatch");
  }
  for (std::size_t s = 0; s < r.stories.size(); ++s) {
    if (count_sections(r.stories[s].raw_text) > r.images.size()) {
      bad("story " + std::to_string(s) + " has more [sent] sections than images");
    }
  }
}

std::size_t count_sections(const std::string& text) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) return 0;
  std::size_t sections = 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    // a trailing separator does not open a new section
    if (tokens[i] == "[sent]" && i + 1 < tokens.size()) ++sections;
  }
  return sections;
}

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

GenderTable parse_gender_table(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  GenderTable table;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (lowercase(line).rfind("name", 0) != 0) {
        fail(ErrorKind::kData, source + ":" + std::to_string(line_no) +
                                   ": expected header name,male_count,female_count");
      }
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(trim(col));
    if (cols.size() != 3) {
      fail(ErrorKind::kData, source + ":" + std::to_string(line_no) + ": expected 3 columns");
    }
    try {
      NameCounts& c = table[lowercase(cols[0])];
      c.male += std::stoull(cols[1]);
      c.female += std::stoull(cols[2]);
    } catch (const std::logic_error&) {
      fail(ErrorKind::kData, source + ":" + std::to_string(line_no) + ": bad count");
    }
  }
  if (header) fail(ErrorKind::kData, source + ": missing header line");
  return table;
}

GenderTable read_gender_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kData, "cannot read gender table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_gender_table(ss.str(), path);
}

Gender lookup_gender(const GenderTable& table, const std::string& name) {
  auto it = table.find(lowercase(name));
  if (it == table.end()) return Gender::kUnknown;
  if (it->second.male > it->second.female) return Gender::kMale;
  if (it->second.female > it->second.male) return Gender::kFemale;
  return Gender::kUnknown;
}

StoryRecord anonymize(const StoryRecord& story, const GenderTable& table) {
  std::vector<EntitySpan> spans = story.entity_spans;
  std::sort(spans.begin(), spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].end <= spans[i].start || spans[i].end > story.raw_text.size()) {
      fail(ErrorKind::kData, "entity span out of range");
    }
    if (i > 0 && spans[i].start < spans[i - 1].end) {
      fail(ErrorKind::kData, "overlapping entity spans");
    }
  }

  std::map<std::string, std::string> name_to_slot;
  std::map<std::string, std::string> slot_to_name = story.placeholders;
  int next_male = 0, next_female = 0, unknown_seen = 0;
  std::string text;
  std::size_t cursor = 0;
  for (const auto& span : spans) {
    text.append(story.raw_text, cursor, span.start - cursor);
    cursor = span.end;
    if (span.kind == EntityKind::kLocation) {
      text += " [location] ";
      continue;
    }
    const std::string name =
        span.name.empty() ? story.raw_text.substr(span.start, span.end - span.start) : span.name;
    const std::string key = lowercase(name);
    auto it = name_to_slot.find(key);
    if (it == name_to_slot.end()) {
      Gender g = lookup_gender(table, name);
      if (g == Gender::kUnknown) g = (unknown_seen++ % 2 == 0) ? Gender::kMale : Gender::kFemale;
      int& next = g == Gender::kMale ? next_male : next_female;
      if (next >= special::kSlotsPerGender) {
        fail(ErrorKind::kCapacity, std::string("more than ") +
                                       std::to_string(special::kSlotsPerGender) + " distinct " +
                                       to_string(g) + " characters in one story");
      }
      const std::string slot = "[" + std::string(to_string(g)) + std::to_string(next++) + "]";
      it = name_to_slot.emplace(key, slot).first;
      slot_to_name[slot] = name;
    }
    text += " " + it->second + " ";
  }
  text.append(story.raw_text, cursor, std::string::npos);

  StoryRecord out = story;
  const auto toks = tokenize(text);
  out.raw_text.clear();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out.raw_text.push_back(' ');
    out.raw_text += toks[i];
  }
  out.entity_spans.clear();
  out.placeholders = std::move(slot_to_name);
  return out;
}

std::size_t select_representative(const CharacterRecord& character) {
  if (character.instances.empty()) {
    fail(ErrorKind::kData, "character '" + character.char_id + "' has no instances");
  }
  const CharacterInstance* best = &character.instances.front();
  for (const auto& inst : character.instances) {
    if (inst.sharpness > best->sharpness ||
        (inst.sharpness == best->sharpness && inst.image_index < best->image_index)) {
      best = &inst;
    }
  }
  return best->image_index;
}

DatasetSplits split_dataset(const std::vector<ImageSequenceRecord>& records, std::uint64_t seed,
                            std::size_t val_count, std::size_t test_count) {
  if (val_count + test_count > 0 && val_count + test_count >= records.size()) {
    fail(ErrorKind::kSize, "cannot hold out " + std::to_string(val_count + test_count) +
                               " of " + std::to_string(records.size()) + " sequences");
  }
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (records[order[i]].id == records[order[i - 1]].id) {
      fail(ErrorKind::kData, "duplicate sequence id '" + records[order[i]].id + "'");
    }
  }
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  DatasetSplits s;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& r = records[order[k]];
    if (k < val_count) {
      s.val.push_back(r);
    } else if (k < val_count + test_count) {
      s.test.push_back(r);
    } else {
      s.train.push_back(r);
    }
  }
  return s;
}

std::vector<ImageSequenceRecord> anonymize_dataset(const std::vector<ImageSequenceRecord>& records,
                                                   const GenderTable& table) {
  std::vector<ImageSequenceRecord> out = records;
  for (auto& r : out) {
    for (std::size_t s = 0; s < r.stories.size(); ++s) {
      try {
        r.stories[s] = anonymize(r.stories[s], table);
      } catch (const Error& e) {
        throw Error(e.kind(), "sequence '" + r.id + "' story " + std::to_string(s) + ": " + e.what());
      }
    }
  }
  return out;
}

std::vector<std::string> story_surface_tokens(const StoryRecord& story) {
  return tokenize(story.raw_text);
}

void encode_stories(std::vector<ImageSequenceRecord>& records, const Vocabulary& vocab) {
  for (auto& r : records) {
    for (auto& s : r.stories) {
      s.tokens = vocab.encode(story_surface_tokens(s));
      s.tokens.push_back(special::kEos);
    }
  }
}

}  // namespace vwp
