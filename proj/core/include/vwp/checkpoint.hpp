#pragma once

#include <string>

#include "vwp/model.hpp"

namespace vwp {

// Binary layout, all integers unsigned 64-bit little-endian:
//   "VWPCKPT1"
//   config length, config bytes (ModelConfig::canonical())
//   repeated until EOF:
//     name length, name bytes, rank, extents[rank], payload (float64 LE)

std::string serialize_checkpoint(const StoryGenModel& model);
StoryGenModel deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const StoryGenModel& model);
StoryGenModel load_checkpoint(const std::string& path);

}  // namespace vwp
