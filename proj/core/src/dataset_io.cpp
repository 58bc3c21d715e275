#include "vwp/dataset_io.hpp"

#include <fstream>

#include "json.hpp"
#include "vwp/errors.hpp"

namespace vwp {

using nlohmann::json;

namespace {

json story_to_json(const StoryRecord& s) {
  json spans = json::array();
  for (const auto& e : s.entity_spans) {
    spans.push_back({{"start", e.start},
                     {"end", e.end},
                     {"kind", e.kind == EntityKind::kPerson ? "person" : "location"},
                     {"name", e.name}});
  }
  json srl = json::array();
  for (const auto& ev : s.srl) srl.push_back({{"predicate", ev.predicate}, {"args", ev.args}});
  json j = {{"raw_text", s.raw_text}, {"entity_spans", spans}, {"srl", srl}};
  if (!s.tokens.empty()) j["tokens"] = s.tokens;
  if (!s.placeholders.empty()) j["placeholders"] = s.placeholders;
  return j;
}

StoryRecord story_from_json(const json& j) {
  StoryRecord s;
  s.raw_text = j.at("raw_text").get<std::string>();
  if (j.contains("entity_spans")) {
    for (const auto& e : j.at("entity_spans")) {
      EntitySpan span;
      span.start = e.at("start").get<std::size_t>();
      span.end = e.at("end").get<std::size_t>();
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "person") {
        span.kind = EntityKind::kPerson;
      } else if (kind == "location") {
        span.kind = EntityKind::kLocation;
      } else {
        fail(ErrorKind::kData, "unknown entity kind '" + kind + "'");
      }
      span.name = e.value("name", std::string{});
      s.entity_spans.push_back(std::move(span));
    }
  }
  if (j.contains("srl")) {
    for (const auto& ev : j.at("srl")) {
      SrlEvent e;
      e.predicate = ev.at("predicate").get<std::string>();
      if (ev.contains("args")) {
        e.args = ev.at("args").get<std::map<std::string, std::vector<std::string>>>();
      }
      s.srl.push_back(std::move(e));
    }
  }
  if (j.contains("tokens")) s.tokens = j.at("tokens").get<std::vector<TokenId>>();
  if (j.contains("placeholders")) {
    s.placeholders = j.at("placeholders").get<std::map<std::string, std::string>>();
  }
  return s;
}

}  // namespace

std::string record_to_json_line(const ImageSequenceRecord& r) {
  json images = json::array();
  for (const auto& im : r.images) {
    images.push_back({{"image_id", im.image_id}, {"global_feat", im.global_feat}});
  }
  json chars = json::array();
  for (const auto& c : r.characters) {
    json inst = json::array();
    for (const auto& i : c.instances) {
      inst.push_back({{"image_index", i.image_index}, {"bbox", i.bbox}, {"sharpness", i.sharpness}});
    }
    chars.push_back({{"char_id", c.char_id},
                     {"gender", to_string(c.gender)},
                     {"instances", inst},
                     {"representative_feat", c.representative_feat}});
  }
  json objects = json::array();
  for (const auto& o : r.objects) objects.push_back({{"object_id", o.object_id}, {"feat", o.feat}});
  json stories = json::array();
  for (const auto& s : r.stories) stories.push_back(story_to_json(s));
  json j = {{"id", r.id},
            {"images", images},
            {"characters", chars},
            {"objects", objects},
            {"stories", stories}};
  return j.dump();
}

ImageSequenceRecord parse_record_line(std::string_view line) {
  ImageSequenceRecord r;
  try {
    const json j = json::parse(line);
    r.id = j.at("id").get<std::string>();
    for (const auto& im : j.at("images")) {
      r.images.push_back({im.at("image_id").get<std::string>(),
                          im.at("global_feat").get<std::vector<double>>()});
    }
    if (j.contains("characters")) {
      for (const auto& c : j.at("characters")) {
        CharacterRecord cr;
        cr.char_id = c.at("char_id").get<std::string>();
        cr.gender = parse_gender(c.value("gender", std::string{"unknown"}));
        if (c.contains("instances")) {
          for (const auto& i : c.at("instances")) {
            CharacterInstance ci;
            ci.image_index = i.at("image_index").get<std::size_t>();
            if (i.contains("bbox")) ci.bbox = i.at("bbox").get<std::array<int, 4>>();
            ci.sharpness = i.value("sharpness", 0.0);
            cr.instances.push_back(ci);
          }
        }
        cr.representative_feat = c.at("representative_feat").get<std::vector<double>>();
        r.characters.push_back(std::move(cr));
      }
    }
    if (j.contains("objects")) {
      for (const auto& o : j.at("objects")) {
        r.objects.push_back({o.at("object_id").get<std::string>(),
                             o.at("feat").get<std::vector<double>>()});
      }
    }
    if (j.contains("stories")) {
      for (const auto& s : j.at("stories")) r.stories.push_back(story_from_json(s));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kData, std::string("malformed record: ") + e.what());
  }
  return r;
}

void for_each_line(const std::string& path,
                   const std::function<void(std::string_view, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kData, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      fn(line, line_no);
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::vector<ImageSequenceRecord> read_dataset(const std::string& path, const IngestLimits& limits) {
  std::vector<ImageSequenceRecord> out;
  for_each_line(path, [&](std::string_view line, std::size_t) {
    auto r = parse_record_line(line);
    validate_record(r, limits);
    out.push_back(std::move(r));
  });
  return out;
}

void write_dataset(const std::string& path, const std::vector<ImageSequenceRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kData, "cannot write " + path);
  for (const auto& r : records) out << record_to_json_line(r) << '\n';
}

}  // namespace vwp
