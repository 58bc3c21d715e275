#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "vwp/corpus.hpp"
#include "vwp/dataset_io.hpp"
#include "vwp/decoding.hpp"
#include "vwp/errors.hpp"
#include "vwp/synthetic.hpp"
#include "vwp/tokenizer.hpp"
#include "vwp/vocab.hpp"

using namespace vwp;

namespace {

using Tokens = std::vector<std::string>;

EntitySpan span_of(const std::string& text, const std::string& name, EntityKind kind,
                   std::size_t from = 0) {
  const auto pos = text.find(name, from);
  REQUIRE(pos != std::string::npos);
  return {pos, pos + name.size(), kind, name};
}

GenderTable names() {
  return parse_gender_table("name,male_count,female_count\nJohn,900,5\nMary,3,800\nJack,700,1\nAlex,50,50\n");
}

ImageSequenceRecord tiny_record(const std::string& id, std::size_t images = 5) {
  ImageSequenceRecord r;
  r.id = id;
  for (std::size_t i = 0; i < images; ++i) r.images.push_back({id + "_" + std::to_string(i), {1.0, 0.0}});
  return r;
}

}  // namespace

TEST_CASE("tokenize examples") {
  CHECK(tokenize("Hello, world!") == Tokens{"hello", ",", "world", "!"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("[male0] ran.") == Tokens{"[male0]", "ran", "."});
  CHECK(tokenize("  Tabs\tand\nnewlines ") == Tokens{"tabs", "and", "newlines"});
  CHECK(tokenize("[sent][location]") == Tokens{"[sent]", "[location]"});
  CHECK(tokenize("it's") == Tokens{"it", "'", "s"});
}

TEST_CASE("placeholders round-trip through detokenize") {
  const Tokens toks = {"[male0]", "met", "[female1]", "at", "[location]", ".", "[sent]", "then", "[male0]", "left", "!"};
  CHECK(tokenize(detokenize(toks)) == toks);
  CHECK(detokenize({"hello", ",", "world", "!"}) == "hello, world!");
}

TEST_CASE("vocabulary layout and thresholds") {
  const Vocabulary specials;
  CHECK(specials.size() == special::kCount);
  CHECK(specials.token(special::kPad) == "[PAD]");
  CHECK(specials.token(special::kSent) == "[sent]");
  CHECK(specials.token(special::kMale0 + 4) == "[male4]");
  CHECK(specials.token(special::kFemale0) == "[female0]");

  const Vocabulary v = Vocabulary::build({{"a", "a", "b"}}, 2);
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("b"));
  CHECK(v.id("b") == special::kUnk);
  const Vocabulary all = Vocabulary::build({{"a", "a", "b"}}, 1);
  CHECK(all.contains("b"));
  CHECK(all.id("a") < all.id("b"));
  CHECK(Vocabulary::build({{"x"}}, 5).size() == special::kCount);

  // bijection over the domain
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all.id(all.token(static_cast<TokenId>(i))) == static_cast<TokenId>(i));
  CHECK_THROWS_AS(all.token(static_cast<TokenId>(all.size())), Error);

  const auto dir = testing::temp_dir("vocab");
  all.save((dir / "v.txt").string());
  CHECK(Vocabulary::load((dir / "v.txt").string()).tokens() == all.tokens());
}

TEST_CASE("gender lookup uses the majority") {
  const auto t = names();
  CHECK(lookup_gender(t, "John") == Gender::kMale);
  CHECK(lookup_gender(t, "mary") == Gender::kFemale);
  CHECK(lookup_gender(t, "Alex") == Gender::kUnknown);
  CHECK(lookup_gender(t, "Zed") == Gender::kUnknown);
  CHECK_THROWS_AS(parse_gender_table("John,1,2\n"), Error);
}

TEST_CASE("anonymize examples") {
  const auto table = names();
  StoryRecord s;
  s.raw_text = "John met Mary in Paris.";
  s.entity_spans = {span_of(s.raw_text, "John", EntityKind::kPerson), span_of(s.raw_text, "Mary", EntityKind::kPerson),
                    span_of(s.raw_text, "Paris", EntityKind::kLocation)};
  const StoryRecord a = anonymize(s, table);
  CHECK(a.raw_text == "[male0] met [female0] in [location] .");
  CHECK(a.placeholders.at("[male0]") == "John");
  CHECK(a.placeholders.at("[female0]") == "Mary");

  StoryRecord plain;
  plain.raw_text = "a quiet day .";
  CHECK(anonymize(plain, table).raw_text == "a quiet day .");

  StoryRecord two;
  two.raw_text = "John met Jack.";
  two.entity_spans = {span_of(two.raw_text, "John", EntityKind::kPerson), span_of(two.raw_text, "Jack", EntityKind::kPerson)};
  CHECK(anonymize(two, table).raw_text == "[male0] met [male1] .");

  // idempotent on already-anonymized text
  CHECK(anonymize(a, table).raw_text == a.raw_text);
  CHECK(anonymize(anonymize(two, table), table).raw_text == "[male0] met [male1] .");
}

TEST_CASE("anonymize repeats and capacity") {
  const auto table = names();
  StoryRecord s;
  s.raw_text = "John saw Jack. Jack waved at John.";
  s.entity_spans = {span_of(s.raw_text, "John", EntityKind::kPerson),
                    span_of(s.raw_text, "Jack", EntityKind::kPerson),
                    span_of(s.raw_text, "Jack", EntityKind::kPerson, 12),
                    span_of(s.raw_text, "John", EntityKind::kPerson, 20)};
  CHECK(anonymize(s, table).raw_text == "[male0] saw [male1] . [male1] waved at [male0] .");

  StoryRecord crowd;
  GenderTable men;
  for (int i = 0; i < 6; ++i) {
    const std::string name = "Man" + std::string(1, static_cast<char>('A' + i));
    men["man" + std::string(1, static_cast<char>('a' + i))] = {10, 0};
    const std::size_t start = crowd.raw_text.size();
    crowd.raw_text += name + " ";
    crowd.entity_spans.push_back({start, start + name.size(), EntityKind::kPerson, name});
  }
  try {
    anonymize(crowd, men);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapacity);
  }

  StoryRecord overlap;
  overlap.raw_text = "John Mary";
  overlap.entity_spans = {{0, 6, EntityKind::kPerson, "x"}, {5, 9, EntityKind::kPerson, "y"}};
  CHECK_THROWS_AS(anonymize(overlap, table), Error);
}

TEST_CASE("unknown names alternate genders by first mention") {
  GenderTable empty;
  StoryRecord s;
  s.raw_text = "Ann Bo Cy";
  s.entity_spans = {{0, 3, EntityKind::kPerson, "Ann"}, {4, 6, EntityKind::kPerson, "Bo"}, {7, 9, EntityKind::kPerson, "Cy"}};
  CHECK(anonymize(s, empty).raw_text == "[male0] [female0] [male1]");
}

TEST_CASE("anonymize then realize restores names of the right gender") {
  const auto table = names();
  StoryRecord s;
  s.raw_text = "John met Mary and Jack.";
  s.entity_spans = {span_of(s.raw_text, "John", EntityKind::kPerson), span_of(s.raw_text, "Mary", EntityKind::kPerson),
                    span_of(s.raw_text, "Jack", EntityKind::kPerson)};
  const StoryRecord a = anonymize(s, table);
  NamePools pools;
  for (const auto& [slot, name] : a.placeholders) {
    (slot.rfind("[male", 0) == 0 ? pools.male : pools.female).push_back(name);
  }
  Rng rng(3);
  const std::string text = realize(tokenize(a.raw_text), pools, rng);
  CHECK(text.find("Mary") == text.find(" ") + 5);  // "X met Mary ..."
  for (const char* n : {"John", "Mary", "Jack"}) CHECK(text.find(n) != std::string::npos);
  CHECK(text.find('[') == std::string::npos);
}

TEST_CASE("select_representative") {
  CharacterRecord c;
  c.instances = {{0, {}, 0.2}, {1, {}, 0.9}, {2, {}, 0.5}};
  CHECK(select_representative(c) == 1);
  c.instances = {{3, {}, 0.1}};
  CHECK(select_representative(c) == 3);
  c.instances = {{0, {}, 0.9}, {1, {}, 0.9}};
  CHECK(select_representative(c) == 0);
  c.instances = {{4, {}, 0.9}, {2, {}, 0.9}};
  CHECK(select_representative(c) == 2);
  c.instances.clear();
  CHECK_THROWS_AS(select_representative(c), Error);
}

TEST_CASE("split_dataset partitions deterministically") {
  std::vector<ImageSequenceRecord> records;
  for (int i = 0; i < 10; ++i) records.push_back(tiny_record("r" + std::to_string(i)));
  const auto s = split_dataset(records, 7, 2, 2);
  CHECK(s.train.size() == 6);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
  std::set<std::string> ids;
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (const auto& r : *part) ids.insert(r.id);
  CHECK(ids.size() == 10);

  const auto again = split_dataset(records, 7, 2, 2);
  auto id_list = [](const std::vector<ImageSequenceRecord>& v) {
    std::vector<std::string> out;
    for (const auto& r : v) out.push_back(r.id);
    return out;
  };
  CHECK(id_list(again.val) == id_list(s.val));
  CHECK(id_list(again.test) == id_list(s.test));
  // input order does not matter, only ids
  std::reverse(records.begin(), records.end());
  CHECK(id_list(split_dataset(records, 7, 2, 2).val) == id_list(s.val));

  CHECK(split_dataset(records, 7, 0, 0).train.size() == 10);
  CHECK_THROWS_AS(split_dataset(records, 7, 5, 5), Error);
  records.push_back(tiny_record("r3"));
  CHECK_THROWS_AS(split_dataset(records, 7, 1, 1), Error);
}

TEST_CASE("record validation") {
  ImageSequenceRecord r = tiny_record("ok");
  CHECK_NOTHROW(validate_record(r, {}));
  CHECK_THROWS_AS(validate_record(tiny_record("few", 4), {}), Error);
  CHECK_THROWS_AS(validate_record(tiny_record("many", 11), {}), Error);
  r.characters.push_back({"c", Gender::kMale, {{7, {}, 1.0}}, {1.0, 0.0}});
  try {
    validate_record(r, {});
    FAIL("expected data error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("ok") != std::string::npos);
  }
  ImageSequenceRecord s = tiny_record("sections");
  s.stories.push_back({"a [sent] b [sent] c [sent] d [sent] e [sent] f", {}, {}, {}, {}});
  CHECK_THROWS_AS(validate_record(s, {}), Error);
  CHECK(count_sections("a [sent] b [sent]") == 2);
}

TEST_CASE("dataset JSON lines round-trip") {
  FixtureConfig fc;
  fc.sequences = 4;
  const auto data = make_fixture_dataset(fc);
  const auto dir = testing::temp_dir("io");
  const auto path = (dir / "d.jsonl").string();
  write_dataset(path, data);
  const auto back = read_dataset(path, {});
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(record_to_json_line(back[i]) == record_to_json_line(data[i]));
  CHECK(back[0].images[0].global_feat == data[0].images[0].global_feat);

  std::ofstream(dir / "bad.jsonl") << record_to_json_line(data[0]) << "\n{not json\n";
  try {
    read_dataset((dir / "bad.jsonl").string(), {});
    FAIL("expected data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kData);
    CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
  }
}

TEST_CASE("fixture corpus anonymises within capacity") {
  const auto data = make_fixture_dataset({});
  const auto table = parse_gender_table(fixture_gender_csv());
  const auto anon = anonymize_dataset(data, table);
  for (const auto& r : anon) {
    CHECK_NOTHROW(validate_record(r, {}));
    for (const auto& s : r.stories) {
      for (const auto& t : tokenize(s.raw_text)) {
        if (t.front() == '[') CHECK(is_bracket_tag(t));
      }
      CHECK(s.raw_text.find("Tom") == std::string::npos);
    }
  }
}
