#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vwp/corpus.hpp"
#include "vwp/vocab.hpp"

namespace vwp {

/// Grid-dependent corpus: each image's section is a single word naming which
/// of the sequence's characters appear in it. Character features are random
/// orthonormal vectors and image features are sums of the present characters,
/// so the character grid is the 0/1 presence matrix.
struct LearnabilityConfig {
  std::size_t sequences = 600;
  std::size_t images = 5;
  std::size_t characters = 3;
  std::size_t feature_dim = 8;
  std::uint64_t seed = 7;
};

/// Pattern word for a non-empty presence mask.
std::string pattern_word(unsigned mask);
Vocabulary learnability_vocab(std::size_t characters);
/// Records carry raw_text and encoded tokens.
std::vector<ImageSequenceRecord> make_learnability_corpus(const LearnabilityConfig& config);

/// Small narrative corpus with named characters, locations and SRL events,
/// for pipeline tests and the bundled fixtures.
struct FixtureConfig {
  std::size_t sequences = 24;
  std::size_t stories_per_sequence = 2;
  std::size_t feature_dim = 16;
  std::uint64_t seed = 11;
};
std::vector<ImageSequenceRecord> make_fixture_dataset(const FixtureConfig& config);
/// Name statistics matching the fixture names, as "name,male_count,female_count".
std::string fixture_gender_csv();
/// One annotated-corpus line per fixture story.
std::vector<std::string> make_annotated_fixture(const std::vector<ImageSequenceRecord>& dataset,
                                                std::uint64_t seed);

}  // namespace vwp
