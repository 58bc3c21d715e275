#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vwp/vocab.hpp"

namespace vwp {

enum class Gender { kMale, kFemale, kUnknown };
const char* to_string(Gender g);
Gender parse_gender(const std::string& s);

struct ImageRecord {
  std::string image_id;
  std::vector<double> global_feat;
};

struct CharacterInstance {
  std::size_t image_index = 0;
  std::array<int, 4> bbox{};
  double sharpness = 0.0;  // higher is sharper
};

struct CharacterRecord {
  std::string char_id;
  Gender gender = Gender::kUnknown;
  std::vector<CharacterInstance> instances;
  std::vector<double> representative_feat;
};

struct ObjectRecord {
  std::string object_id;
  std::vector<double> feat;
};

enum class EntityKind { kPerson, kLocation };

struct EntitySpan {
  std::size_t start = 0;  // byte offsets into raw_text, [start, end)
  std::size_t end = 0;
  EntityKind kind = EntityKind::kPerson;
  std::string name;
};

struct SrlEvent {
  std::string predicate;
  std::map<std::string, std::vector<std::string>> args;  // arg0, arg1, arg2, arg-loc
};

struct StoryRecord {
  std::string raw_text;
  std::vector<EntitySpan> entity_spans;
  std::vector<SrlEvent> srl;
  std::vector<TokenId> tokens;                     // filled by prepare, ends with [EOS]
  std::map<std::string, std::string> placeholders;  // "[male0]" -> original name
};

struct ImageSequenceRecord {
  std::string id;
  std::vector<ImageRecord> images;
  std::vector<CharacterRecord> characters;
  std::vector<ObjectRecord> objects;
  std::vector<StoryRecord> stories;

  /// Feature dimension D, 0 for a record without images.
  std::size_t feature_dim() const;
};

/// Bounds enforced at ingest.
struct IngestLimits {
  std::size_t min_images = 5;
  std::size_t max_images = 10;
  std::size_t max_characters = 5;
  std::size_t max_objects = 20;
};

/// Throws kData naming the sequence id when a record violates its invariants.
void validate_record(const ImageSequenceRecord& record, const IngestLimits& limits);

/// Number of [sent]-delimited sections in a text.
std::size_t count_sections(const std::string& text);

// ---------------------------------------------------------------------------
// Name statistics and anonymisation

struct NameCounts {
  std::uint64_t male = 0;
  std::uint64_t female = 0;
};
/// Keys are lowercased names.
using GenderTable = std::map<std::string, NameCounts>;

/// Reads "name,male_count,female_count" with a header line.
GenderTable read_gender_table(const std::string& path);
GenderTable parse_gender_table(const std::string& text, const std::string& source = "<text>");

/// Majority vote; kUnknown for ties and missing names.
Gender lookup_gender(const GenderTable& table, const std::string& name);

/// Replaces person spans with gendered placeholders in order of first
/// mention and location spans with [location]. The output text is the
/// space-joined token stream; entity_spans are consumed and the
/// placeholder -> name mapping is stored on the story.
StoryRecord anonymize(const StoryRecord& story, const GenderTable& table);

/// Image index of the sharpest instance; ties go to the lowest image index.
std::size_t select_representative(const CharacterRecord& character);

struct DatasetSplits {
  std::vector<ImageSequenceRecord> train;
  std::vector<ImageSequenceRecord> val;
  std::vector<ImageSequenceRecord> test;
};

/// Seeded partition by sequence id.
DatasetSplits split_dataset(const std::vector<ImageSequenceRecord>& records, std::uint64_t seed,
                            std::size_t val_count, std::size_t test_count);

/// Anonymises and tokenises every story of every record.
std::vector<ImageSequenceRecord> anonymize_dataset(const std::vector<ImageSequenceRecord>& records,
                                                   const GenderTable& table);

/// Surface tokens of a processed story (from raw_text).
std::vector<std::string> story_surface_tokens(const StoryRecord& story);

/// Encodes raw_text into ids, appending [EOS].
void encode_stories(std::vector<ImageSequenceRecord>& records, const Vocabulary& vocab);

}  // namespace vwp
