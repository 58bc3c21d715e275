#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "vwp/corpus.hpp"

namespace vwp {

/// One ImageSequenceRecord as a single JSON object (no trailing newline).
std::string record_to_json_line(const ImageSequenceRecord& record);
ImageSequenceRecord parse_record_line(std::string_view line);

/// Reads a JSON Lines dataset. Errors carry "path:line".
std::vector<ImageSequenceRecord> read_dataset(const std::string& path, const IngestLimits& limits);
void write_dataset(const std::string& path, const std::vector<ImageSequenceRecord>& records);

/// Calls fn(line, line_number) for every non-blank line of a file.
void for_each_line(const std::string& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

}  // namespace vwp
